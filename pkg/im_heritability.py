"""
Plausibility inference on the heritability coefficient of a two-variance-component mixed model.

Examples:
    python im_heritability.py reduce --design eigen --eigen assay --stats 9.1,2.3,10.4
    python im_heritability.py pl --data data.csv --grid 0:0.999:400 --output pl.csv
    python im_heritability.py interval --data data.csv --alpha 0.05
    python im_heritability.py simulate --pattern 2,4,4,5 --sigma_a2 1 --sigma_e2 1 --reps 1000 --seed 1
    python im_heritability.py check
"""

import sys

from vclib.cli import run_cli

if __name__ == '__main__':
    sys.exit(run_cli(sys.argv[1:]))
