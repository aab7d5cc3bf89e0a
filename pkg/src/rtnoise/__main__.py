import sys

from rtnoise.cli import main

sys.exit(main())
