import sys

from fhi.cli import main

sys.exit(main())
