import sys
from pathlib import Path

# the exporter is a standalone script, not an installed package
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
