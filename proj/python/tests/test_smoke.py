import itertools
import math

import pytest

import coldstart_elicit as ce


def small():
    return ce.generate_synthetic(n_users=40, n_artists=20, n_genres=4, density=0.4, seed=3)


def test_records_round_trip():
    rows = [("u1", "a1", "artist", 80.0), ("u1", "g1", "genre", 30.0), ("u2", "a1", "artist", 12.5)]
    m = ce.RatingMatrix.from_records(rows)
    assert len(m) == 3
    assert m.scale == "raw_0_100"
    assert sorted(m.records()) == sorted((u, i, t.capitalize(), v) for u, i, t, v in rows)
    with pytest.raises(ce.DuplicateError):
        ce.RatingMatrix.from_records(rows + [("u1", "a1", "artist", 1.0)])


def test_save_and_load(tmp_path):
    m = small()
    path = tmp_path / "r.tsv"
    ce.save_ratings(path, m)
    back = ce.load_ratings(path)
    assert sorted(back.records()) == sorted(m.records())


def test_splits_and_semi_binary():
    m = small()
    s = ce.split_users(m, 0.9, 1)
    assert len(s["cold_users"]) == 36
    r = ce.re_split(s["cold"], 1, 3, "artist", 2)
    assert len(r["known"]) + len(r["pool"]) + len(r["test"]) <= len(s["cold"])
    b = ce.semi_binarize(m)
    assert b.scale == "semi_binary"
    assert {v for *_, v in b.records()} <= {1.0, 0.01}


def test_fit_and_rmse():
    m = small()
    model = ce.fit(m, factors=4, epochs=20)
    assert 0.0 <= model.predict(0, 0) <= 100.0
    assert model.rmse(m) < 40.0


def brute_split_error(rows, users, cand, thr):
    parts = [[], [], []]
    for u in users:
        v = rows.get((u, cand))
        parts[2 if v is None else (0 if v >= thr else 1)].append(u)
    items = {i for (_, i) in rows}
    total = 0.0
    for p in parts:
        for i in items:
            vals = [rows[(u, i)] for u in p if (u, i) in rows]
            if vals:
                mean = sum(vals) / len(vals)
                total += sum((x - mean) ** 2 for x in vals)
    return total


def test_split_error_matches_python_reference():
    m = small()
    rows = {}
    name_to_user = {n: k for k, n in enumerate(m.user_names)}
    name_to_item = {n: k for k, n in enumerate(m.item_names)}
    for u, i, _, v in m.records():
        rows[(name_to_user[u], name_to_item[i])] = v
    users = m.user_ids()[:15]
    for cand in m.item_ids()[:6]:
        assert math.isclose(ce.split_error(m, users, cand), brute_split_error(rows, users, cand, 50.0), abs_tol=1e-7)


def test_pair_branch_table():
    rank = {1.0: 2, 0.01: 1, None: 0}
    for a, b in itertools.product([1.0, 0.01, None], repeat=2):
        expected = "Indifferent" if rank[a] == rank[b] else ("PreferFirst" if rank[a] > rank[b] else "PreferSecond")
        assert ce.pair_branch(a, b) == expected


def test_tree_and_traversal():
    m = small()
    t = ce.build_tree(m, mode="hybrid", candidate_types=["artist", "genre"], max_depth=4)
    d = ce.tree_dict(t)
    root = d["root"]
    assert root["n_users"] == len(m.user_ids())
    assert sum(b["n_users"] for b in root["branches"]) == root["n_users"]
    q = t.next_query([])
    assert q == root["query"]["item_ids"][0]
    assert t.next_query([(q, "Hater")]) != q

    p = ce.build_tree(ce.semi_binarize(m), mode="pairwise", max_depth=3)
    pq = p.next_query()
    assert isinstance(pq, tuple) and len(pq) == 2
    assert " vs " in p.text(1)


def test_rankings():
    m = small()
    helf = ce.rank("helf", m)
    assert all(0.0 <= s <= 1.0 for _, s in helf)
    pop = ce.rank("popularity", m)
    scores = [s for _, s in pop]
    assert scores == sorted(scores, reverse=True)
    with pytest.raises(ValueError):
        ce.rank("oracle", m)


def test_simulate():
    cfg = {
        "dataset": {"synthetic": {"n_users": 50, "n_artists": 30, "n_genres": 4, "density": 0.4}},
        "splits": {"t_per_user": 4},
        "mf": {"epochs": 5, "factors": 4},
        "simulation": {"n_iterations": 2, "strategies": ["tree_hybrid", "random"]},
    }
    rows, meta = ce.simulate(cfg)
    assert len(rows) == 6
    assert rows[0]["iteration"] == 0
    assert meta["mixed_scales"] is False
    assert ce.simulate(cfg)[0] == rows
    with pytest.raises(ce.ConfigError):
        ce.simulate({"simulation": {"strategies": ["nope"]}})
    assert "pairwise_tree_2" in ce.strategy_names()
