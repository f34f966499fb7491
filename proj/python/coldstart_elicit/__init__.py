"""Decision-tree rating elicitation for cold-start users."""

import csv
import io
import json

from ._core import (
    ConfigError,
    DuplicateError,
    MFModel,
    ParseError,
    ProtocolError,
    RatingMatrix,
    Tree,
    build_tree,
    filter_density,
    fit,
    generate_synthetic,
    load_ratings,
    pair_branch,
    rank,
    re_split,
    save_ratings,
    semi_binarize,
    split_error,
    split_users,
    strategy_names,
)
from . import _core

__version__ = "0.1.0"


def tree_dict(tree, depth_limit=-1):
    return json.loads(tree.to_json(depth_limit))


def simulate(config):
    """Run every configured strategy; returns (rows, metadata)."""
    csv_text, meta = _core.simulate_json(json.dumps(config))
    rows = []
    for row in csv.DictReader(io.StringIO(csv_text)):
        row["iteration"] = int(row["iteration"])
        row["rmse"] = float(row["rmse"])
        for k in ("known_size", "queries_issued", "queries_answered"):
            row[k] = int(row[k])
        rows.append(row)
    return rows, json.loads(meta)
