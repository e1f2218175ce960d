import sys

from genmat.cli import main

sys.exit(main())
