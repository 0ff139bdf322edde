import math

import pytest

import signedrec


def test_ndcg_hand_example():
    assert signedrec.ndcg_at_k([10, 11, 12], [10, 12], 3) == pytest.approx(0.9197, abs=1e-4)
    assert signedrec.recall_at_k([1, 2, 3], [3, 9], 2) == 0.0


def test_worked_example_relations():
    rels = signedrec.enumerate_relations([1, 2], [5, 6], [2, 3], [4])
    by_case = {}
    for case, i, j in rels:
        by_case.setdefault(case, []).append((i, j))
    assert by_case[3] == [(2, 3)]
    assert by_case[5] == [(2, 4), (3, 4)]
    assert by_case[6] == [(5, 4), (6, 4)]


def test_eligible_negatives():
    observed = [[0, 1, 2], [2, 3], [4]]
    assert signedrec.eligible_negatives(7, observed, [(0, 1)], [(0, 2)], 0) == [5, 6]


def test_errors_map_to_python():
    with pytest.raises(signedrec.SignedRecError):
        signedrec.validate_tower_shape(4, 3)
    with pytest.raises(ValueError):
        signedrec.ndcg_at_k([1], [], 1)


def test_synthetic_and_pipeline():
    data = signedrec.generate_synthetic({"users": "30", "items": "60", "seed": "2"})
    assert data["n_users"] == 30
    assert len(data["interactions"]) > 0
    csv = signedrec.run_synthetic_experiment(
        {"users": "40", "items": "80", "density": "0.1", "kind": "implicit", "seed": "1"},
        {"models": "bpr,sdpl", "repeats": "1", "dim": "8", "hidden_layers": "1",
         "epochs": "2", "pretrain_epochs": "2", "ks": "10"},
    )
    rows = [line.split(",") for line in csv.strip().splitlines()[1:]]
    assert {r[0] for r in rows} == {"bpr", "sdpl"}
    assert all(math.isfinite(float(r[5])) for r in rows if r[2] == "all")
