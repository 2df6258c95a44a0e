import sys

from argbench.cli import main

sys.exit(main())
