import sys

from fcmcodec.cli.app import main

if __name__ == '__main__':
    sys.exit(main())
