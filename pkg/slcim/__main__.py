import sys

from slcim.harness.cli import main

sys.exit(main())
