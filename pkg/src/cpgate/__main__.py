import sys

from cpgate.cli import main

sys.exit(main())
