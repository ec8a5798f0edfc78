import sys

from neflow.main import main

sys.exit(main())
