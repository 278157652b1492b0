import sys

from fcpreg.cli import main

sys.exit(main())
