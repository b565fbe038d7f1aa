import sys

from canonsurf.cli import main

sys.exit(main())
