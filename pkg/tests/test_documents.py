import json

import numpy as np
import pytest

from idmdp.allocation import AllocationModel, build_ross_case
from idmdp.documents import (
    DocumentError,
    atomic_write,
    document_to_model,
    load_model,
    model_to_document,
    save_model,
    validate_document,
)
from idmdp.exceptions import InvalidModelError


def test_mdp_round_trip_exact(tmp_path, toy):
    path = tmp_path / "toy.json"
    save_model(toy, path)
    back = load_model(path)
    np.testing.assert_array_equal(back.transitions, toy.transitions)
    np.testing.assert_array_equal(back.rewards, toy.rewards)
    assert back.discount == toy.discount and back.meta["horizon"] == 100


def test_float_repr_round_trip(tmp_path, rng):
    from idmdp.mdp import FiniteMdp
    P = rng.random((2, 3, 3))
    P /= P.sum(axis=2, keepdims=True)
    m = FiniteMdp(transitions=P, rewards=rng.normal(size=(3, 2)) / 3, discount=0.7)
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    np.testing.assert_array_equal(back.rewards, m.rewards)
    np.testing.assert_array_equal(back.transitions, m.transitions)


def test_allocation_round_trip(tmp_path):
    m = build_ross_case("ii")
    save_model(m, tmp_path / "r.json")
    back = load_model(tmp_path / "r.json")
    assert isinstance(back, AllocationModel)
    np.testing.assert_array_equal(back.costs, m.costs)


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d.update(kind="graph"), "kind"),
    (lambda d: d.pop("rewards"), "<root>"),
    (lambda d: d.update(discount=1.5), "discount"),
    (lambda d: d["rewards"].pop(), "rewards"),
    (lambda d: d["rewards"][2].append(0.0), "rewards/2"),
    (lambda d: d["transitions"][1][0].pop(), "transitions/1/0"),
    (lambda d: d["rewards"][0].__setitem__(0, "x"), "rewards/0/0"),
])
def test_validation_paths(toy, mutate, path):
    doc = json.loads(json.dumps(model_to_document(toy)))
    mutate(doc)
    with pytest.raises(DocumentError) as err:
        validate_document(doc)
    assert err.value.path == path


def test_model_invariants(toy):
    doc = model_to_document(toy)
    doc["transitions"][0][0] = [0.9, 0.9, 0.0, 0.0]
    with pytest.raises(InvalidModelError):
        document_to_model(doc)


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(DocumentError):
        load_model(p)


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "sub" / "out.txt"
    atomic_write(target, "hello")
    assert target.read_text() == "hello"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]
