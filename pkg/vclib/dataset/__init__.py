from .fixtures import FIXTURES, assay_eigenstructure, lamb_eigenstructure, balanced_oneway_eigenstructure
from .utils import load_oneway, load_general, load_eigen, parse_eigen, parse_stats, load_reduction, to_jsonable, \
    dump_json, dump_csv, read_csv
