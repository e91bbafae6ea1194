import sys

from ppds.cli import main

sys.exit(main())
