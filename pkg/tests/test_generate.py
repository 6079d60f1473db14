import json

import numpy as np
import pytest
from scipy.stats import kstest

from causallab.dirichlet import flat_hyperprior, sample_hyperprior
from causallab.errors import DatasetFormatError, ValidationError
from causallab.generate import (
    HyperpriorDescriptor,
    LabeledDataset,
    LabeledDistribution,
    build_dataset,
    causal_confounded_joint,
    confounded_joint,
    load_dataset,
    sample_batch,
    sample_instance,
    save_dataset,
)
from causallab.rng import stream
from causallab.structures import ALL_STRUCTURES, CausalStructure
from causallab.tables import JointTable, mutual_information

FLAT22 = flat_hyperprior(2, 2)


def test_independent_has_zero_mutual_information():
    rng = stream(0, 100)
    for _ in range(50):
        item = sample_instance(CausalStructure.INDEPENDENT, 2, 2, FLAT22, rng)
        assert mutual_information(item.joint) == pytest.approx(0.0, abs=1e-12)
        assert item.h_cardinality is None


def test_confounded_degenerate_weights_give_rank_one():
    # single active confounder state forces an outer-product table
    p_h = np.array([1.0, 0.0])
    x_rows = np.array([[0.3, 0.7], [0.9, 0.1]])
    y_rows = np.array([[0.6, 0.4], [0.2, 0.8]])
    joint = confounded_joint(p_h, x_rows, y_rows)
    assert np.linalg.matrix_rank(joint.entries, tol=1e-12) == 1
    assert np.allclose(joint.entries, np.outer(x_rows[0], y_rows[0]))


def test_confounded_forced_single_state_rank_one():
    rng = stream(0, 101)
    item = sample_instance(
        CausalStructure.CONFOUNDED, 3, 3, flat_hyperprior(3, 3), rng, h_cardinality=1
    )
    assert np.linalg.matrix_rank(item.joint.entries, tol=1e-12) == 1


def test_confounded_marginal_linearity():
    rng = stream(0, 102)
    for _ in range(20):
        h = int(rng.integers(2, 30))
        p_h = rng.dirichlet(np.ones(h))
        x_rows = rng.dirichlet(np.ones(3), size=h)
        y_rows = rng.dirichlet(np.ones(4), size=h)
        joint = confounded_joint(p_h, x_rows, y_rows)
        assert np.allclose(joint.entries.sum(axis=1), p_h @ x_rows, atol=1e-12)
        assert np.allclose(joint.entries.sum(axis=0), p_h @ y_rows, atol=1e-12)


def test_directed_cause_marginal_is_uniform():
    # under flat priors the cause marginal of a composed joint is flat on (0,1)
    rng = stream(0, 103)
    joints, _ = sample_batch(CausalStructure.X_TO_Y, 2, 2, 100_000, FLAT22, rng)
    a = joints.sum(axis=2)[:, 0]
    assert kstest(a, "uniform").statistic < 0.01


def test_transpose_duality_stream_for_stream():
    spec = flat_hyperprior(3, 3)
    for key in range(10):
        item_yx = sample_instance(CausalStructure.Y_TO_X, 3, 3, spec, stream(9, key))
        item_xy = sample_instance(CausalStructure.X_TO_Y, 3, 3, spec, stream(9, key))
        assert np.array_equal(item_yx.joint.entries, item_xy.joint.entries.T)


def test_conf_transpose_duality_stream_for_stream():
    spec = flat_hyperprior(3, 3)
    for key in range(10):
        a = sample_instance(CausalStructure.Y_TO_X_CONF, 3, 3, spec, stream(10, key))
        b = sample_instance(CausalStructure.X_TO_Y_CONF, 3, 3, spec, stream(10, key))
        assert np.array_equal(a.joint.entries, b.joint.entries.T)
        assert a.h_cardinality == b.h_cardinality


def test_h_cardinality_range():
    rng = stream(0, 104)
    hs = [
        sample_instance(CausalStructure.CONFOUNDED, 2, 2, FLAT22, rng).h_cardinality
        for _ in range(300)
    ]
    assert min(hs) >= 2 and max(hs) <= 100
    assert len(set(hs)) > 40  # spread across the range


def test_factor_product_variant_valid():
    rng = stream(0, 105)
    for _ in range(50):
        item = sample_instance(
            CausalStructure.X_TO_Y_CONF, 2, 2, FLAT22, rng, variant="factor-product"
        )
        assert item.joint.entries.sum() == pytest.approx(1.0)


def test_sample_batch_statistics_match_instances():
    # batched and per-item samplers draw from the same distribution
    spec = flat_hyperprior(2, 2)
    rng = stream(0, 106)
    batch, _ = sample_batch(CausalStructure.CONFOUNDED, 2, 2, 4000, spec, rng)
    singles = np.stack(
        [
            sample_instance(CausalStructure.CONFOUNDED, 2, 2, spec, stream(0, 107, i)).joint.entries
            for i in range(4000)
        ]
    )
    stat = kstest(batch[:, 0, 0], singles[:, 0, 0]).statistic
    assert stat < 0.05
    assert abs(batch.mean() - singles.mean()) < 0.01


@pytest.mark.parametrize("structure", ALL_STRUCTURES)
def test_sampled_joints_always_valid_bulk(structure):
    # vectorized validity sweep per structure (one million draws)
    spec = flat_hyperprior(2, 2)
    rng = stream(0, 108, int(structure))
    joints, h = sample_batch(structure, 2, 2, 1_000_000, spec, rng)
    assert np.isfinite(joints).all()
    assert (joints >= 0).all()
    assert np.abs(joints.sum(axis=(1, 2)) - 1.0).max() < 1e-9
    if CausalStructure(structure).has_confounder:
        assert ((h >= 2) & (h <= 100)).all()
    else:
        assert (h == -1).all()


@pytest.mark.parametrize("structure", ALL_STRUCTURES)
def test_sampled_instances_valid_per_item(structure):
    spec = sample_hyperprior(2, 2, 4.0, 5, stream(1, 109))
    rng = stream(0, 110, int(structure))
    for _ in range(300):
        item = sample_instance(structure, 2, 2, spec, rng)
        assert np.isfinite(item.joint.entries).all()


def test_build_dataset_counts_and_interleaving():
    ds = build_dataset(2, 2, 7, list(ALL_STRUCTURES), FLAT22, seed=0)
    assert len(ds) == 42
    assert all(count == 7 for count in ds.class_counts.values())
    labels = [int(item.label) for item in ds.items]
    assert labels == sorted(labels)  # class-major, index-minor


def test_build_dataset_two_class():
    ds = build_dataset(2, 2, 5, [CausalStructure.X_TO_Y, CausalStructure.CONFOUNDED], FLAT22, 3)
    assert set(ds.class_counts) == {CausalStructure.X_TO_Y, CausalStructure.CONFOUNDED}


def test_build_dataset_deterministic():
    a = build_dataset(2, 2, 10, list(ALL_STRUCTURES), FLAT22, seed=5)
    b = build_dataset(2, 2, 10, list(ALL_STRUCTURES), FLAT22, seed=5)
    assert a == b


def test_dataset_round_trip(tmp_path):
    ds = build_dataset(2, 3, 20, list(ALL_STRUCTURES), flat_hyperprior(2, 3), seed=8)
    path = tmp_path / "ds.jsonl"
    save_dataset(ds, path)
    loaded = load_dataset(path)
    assert loaded == ds
    for a, b in zip(ds.items, loaded.items):
        assert np.array_equal(a.joint.entries, b.joint.entries)  # bit-exact doubles


def test_dataset_truncated_file(tmp_path):
    ds = build_dataset(2, 2, 5, [CausalStructure.X_TO_Y], FLAT22, seed=8)
    path = tmp_path / "ds.jsonl"
    save_dataset(ds, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(DatasetFormatError, match="truncated"):
        load_dataset(path)


def test_dataset_malformed_record_names_index(tmp_path):
    ds = build_dataset(2, 2, 5, [CausalStructure.X_TO_Y], FLAT22, seed=8)
    path = tmp_path / "ds.jsonl"
    save_dataset(ds, path)
    lines = path.read_text().splitlines()
    lines[3] = '{"label": 1, "h": -1, "entries": [0.5, "bogus"]}'
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match="record 2"):
        load_dataset(path)


def test_dataset_version_rejected(tmp_path):
    ds = build_dataset(2, 2, 2, [CausalStructure.X_TO_Y], FLAT22, seed=8)
    path = tmp_path / "ds.jsonl"
    save_dataset(ds, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    header["schema_version"] = 99
    lines[0] = json.dumps(header, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(DatasetFormatError, match="unsupported schema version"):
        load_dataset(path)


def test_labeled_distribution_invariant():
    joint = JointTable.uniform(2, 2)
    with pytest.raises(ValidationError):
        LabeledDistribution(joint, CausalStructure.X_TO_Y, h_cardinality=5)
    with pytest.raises(ValidationError):
        LabeledDistribution(joint, CausalStructure.CONFOUNDED, h_cardinality=None)


def test_dataset_class_counts_validated():
    joint = JointTable.uniform(2, 2)
    item = LabeledDistribution(joint, CausalStructure.X_TO_Y)
    with pytest.raises(ValidationError):
        LabeledDataset((item,), 2, 2, {CausalStructure.X_TO_Y: 2})


def test_mixture_spec_round_trip_description(tmp_path):
    spec = sample_hyperprior(2, 2, 3.0, 4, stream(2, 111))
    ds = build_dataset(2, 2, 3, [CausalStructure.X_TO_Y], spec, seed=12)
    assert ds.descriptor == HyperpriorDescriptor(3.0, 4, 12)
    path = tmp_path / "mix.jsonl"
    save_dataset(ds, path)
    assert load_dataset(path).descriptor == ds.descriptor
