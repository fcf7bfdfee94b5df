# Puts the repository root on sys.path so tests import the src package.
