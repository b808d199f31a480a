import sys

from chsplit.cli import main

sys.exit(main())
