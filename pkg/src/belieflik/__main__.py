import sys

from belieflik.cli import main

sys.exit(main())
