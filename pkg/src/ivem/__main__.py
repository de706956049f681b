import sys

from ivem.cli import main

sys.exit(main())
