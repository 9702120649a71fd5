import sys

from modules import config
from modules import cli

# Initialize centralized logging configuration - consistent logging format across all modules
config.setup_logging()

if __name__ == "__main__":
    sys.exit(cli.main())
