import sys
from pathlib import Path

# make scripts/ importable from the test suite regardless of how pytest is run
sys.path.insert(0, str(Path(__file__).resolve().parent))
