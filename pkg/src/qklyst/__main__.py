import sys

from qklyst.cli import main

sys.exit(main())
