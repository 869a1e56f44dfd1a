__version__ = "0.1.0"

# bumped when any output file layout changes
SCHEMA_VERSION = 1
