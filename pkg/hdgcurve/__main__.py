from hdgcurve.cli import main

raise SystemExit(main())
