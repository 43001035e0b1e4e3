import sys
from pathlib import Path

# make helpers importable regardless of how pytest was invoked
sys.path.insert(0, str(Path(__file__).parent))
