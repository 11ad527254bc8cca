import sys

from fracmixed.cli import main

sys.exit(main())
