import itertools

import numpy as np
import pandas as pd
import pytest

from src.decoder import DecoderConfig
from src.encoder import EncoderConfig
from src.errors import ConfigError, FormatError, NonFiniteLossError, ShapeError
from src.ndgrad import Array2
from src.synthgen import SceneSpec, gen_corpus, write_scene
from src.training import (PLUS, STAR, FloorplanModel, StageConfig, TrainConfig, Trainer, lexicographic_assignment,
                          load_samples, loss_plus, loss_star, match_rooms, matched_target, pad_gt, pair_costs,
                          run_gradient_suite, samples_from_scenes, schedule, train_three_stage)


def brute_force(cost):
    m = cost.shape[0]
    perms = np.array(list(itertools.permutations(range(m))))
    return cost[np.arange(m), perms].sum(axis=1).min()


def test_pad_gt_appends_empty_rooms():
    G = pad_gt(np.ones((2, 5)), 4)
    assert G.shape == (4, 5)
    assert G[2:].sum() == 0
    with pytest.raises(ConfigError):
        pad_gt(np.ones((3, 5)), 2)
    with pytest.raises(ShapeError):
        pad_gt(np.ones(5), 2)


@pytest.mark.parametrize("m", [5, 6])
def test_hungarian_matches_exhaustive_search(m):
    rng = np.random.default_rng(m)
    for _ in range(250):
        cost = rng.uniform(0, 1, size=(m, m))
        sigma = lexicographic_assignment(cost)
        assert sorted(sigma) == list(range(m))
        assert cost[np.arange(m), sigma].sum() == pytest.approx(brute_force(cost), rel=1e-12, abs=1e-12)


def test_ties_resolve_to_lexicographically_smallest_permutation():
    np.testing.assert_array_equal(lexicographic_assignment(np.zeros((3, 3))), [0, 1, 2])
    cost = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
    # optimal cost 1: slot 0 takes column 1 first
    np.testing.assert_array_equal(lexicographic_assignment(cost), [1, 0, 2])


def test_match_rooms_recovers_permutation():
    rng = np.random.default_rng(0)
    G = (rng.uniform(size=(3, 40)) > 0.5).astype(float)
    perm = np.array([2, 0, 1])
    np.testing.assert_array_equal(match_rooms(G[perm], G, PLUS), perm)
    np.testing.assert_array_equal(match_rooms(1.0 - G[perm], G, STAR), perm)
    with pytest.raises(ShapeError):
        match_rooms(G[:2], G, PLUS)


@pytest.mark.parametrize("kind", [PLUS, STAR])
def test_matching_follows_permuted_gt_rows(kind):
    rng = np.random.default_rng(11)
    m, n = 5, 60
    G = pad_gt((rng.uniform(size=(3, n)) > 0.5).astype(float), m)
    S = rng.uniform(-0.2, 1.2, size=(m, n))
    T, W = Array2(np.zeros((3, 2))), Array2(np.ones((2, 1)))

    def matched_loss(G_rows, sigma):
        target = matched_target(G_rows, sigma)
        if kind == PLUS:
            return loss_plus(Array2(S.T), target, T, W).total.item()
        return loss_star(Array2(S.T), target, T).total.item()

    sigma = match_rooms(S, G, kind)
    reference = matched_loss(G, sigma)
    for perm in itertools.permutations(range(m)):
        G_perm = G[list(perm)]
        sigma_perm = match_rooms(S, G_perm, kind)
        # every slot keeps its GT room; empty rows may swap among themselves
        np.testing.assert_array_equal(G_perm[sigma_perm], G[sigma])
        assert matched_loss(G_perm, sigma_perm) == pytest.approx(reference, abs=1e-12)


def test_pair_costs_star_counts_disagreement():
    S = np.array([[0.0, 0.0, 2.0, 2.0]])
    G = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 1.0]])
    np.testing.assert_allclose(pair_costs(S, G, STAR), [[0.0, 1.5]])
    np.testing.assert_allclose(pair_costs(G, G, PLUS), [[0.0, 1.0], [1.0, 0.0]])


def test_matched_target_layout():
    G = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    target = matched_target(G, np.array([1, 2, 0]))
    np.testing.assert_array_equal(target, [[0, 0, 1], [1, 0, 0]])


def test_loss_plus_terms():
    target = np.array([[1.0], [0.0]])
    terms = loss_plus(Array2([[1.0], [0.0]]), target, Array2([[0.0, 1.0], [0.5, 0.2]]), Array2([[1.0], [1.0]]))
    assert terms.total.item() == 0.0
    terms = loss_plus(Array2([[0.5], [0.0]]), target, Array2([[-0.5, 1.5]]), Array2([[0.0], [2.0]]))
    assert terms.rec.item() == pytest.approx(0.125)
    assert terms.reg_t.item() == pytest.approx(1.0)
    assert terms.reg_w.item() == pytest.approx(2.0)
    assert terms.values()["total"] == pytest.approx(3.125)


def test_loss_star_terms():
    target = np.array([[1.0], [0.0]])
    perfect = loss_star(Array2([[0.0], [1.5]]), target, Array2([[0.0, 1.0]]))
    assert perfect.total.item() == 0.0
    terms = loss_star(Array2([[0.5], [0.25]]), target, Array2([[0.005, 0.9]]), gamma=0.01)
    assert terms.rec.item() == pytest.approx((0.5 + 0.75) / 2)
    assert terms.reg_t.item() == pytest.approx(0.005 + 0.1)
    assert terms.reg_w.item() == 0.0


def test_schedules():
    assert [s.stage for s in schedule("staged", epochs=4)] == [1, 2, 3]
    joint = schedule("joint", epochs=4)
    assert [(s.stage, s.epochs) for s in joint] == [(2, 8), (3, 4)]
    assert joint[0].loss_kind == PLUS and joint[1].loss_kind == STAR
    assert StageConfig(1).decoder_stage == "axis-only"
    with pytest.raises(ConfigError):
        schedule("random")
    with pytest.raises(ConfigError):
        TrainConfig(stages=[StageConfig(3), StageConfig(1)])
    full = TrainConfig.full_scale(seed=5)
    assert full.seed == 5 and {s.epochs for s in full.stages} == {600}
    assert {s.batch_size for s in full.stages} == {16}


def test_gradient_suite_passes():
    results = run_gradient_suite(configs=2, seed=1)
    assert results
    failed = [(r.name, r.failures) for r in results if not r.passed]
    assert failed == []
    assert {r.name.split("/")[1] for r in results} == {"L_plus", "L_star"}


@pytest.mark.slow
def test_full_gradient_suite():
    results = run_gradient_suite(configs=50)
    assert all(r.passed for r in results)
    assert max(r.max_rel_err for r in results) < 1e-4


def small_model(encoder="table"):
    return FloorplanModel(EncoderConfig(mode=encoder, m=4, q=16, conv_widths=(4, 8), attention_layers=1, heads=2),
                          DecoderConfig(q=16, l=4, u=4))


def small_config(epochs=2, **overrides):
    values = dict(stages=schedule("staged", epochs=epochs, batch_size=2, lr=1e-3), query_points=64)
    values.update(overrides)
    return TrainConfig(**values)


@pytest.fixture(scope="module")
def scenes():
    return gen_corpus(3, 3, SceneSpec(min_rooms=1, max_rooms=2))


def test_three_stage_training_writes_log_and_checkpoints(scenes, tmp_path):
    result = train_three_stage(samples_from_scenes(scenes, with_images=False), small_model(), small_config(),
                               tmp_path)
    # 3 scenes in batches of 2: 2 steps per epoch, 2 epochs, 3 stages
    assert len(result.log) == 12
    assert list(result.log.columns) == ["step", "stage", "epoch", "L_rec", "L_T", "L_W", "total", "lr"]
    assert list(result.log["stage"].unique()) == [1, 2, 3]
    assert np.isfinite(result.log["total"]).all()
    assert [p.name for p in result.checkpoints] == ["stage1", "stage2", "stage3"]
    assert (tmp_path / "loss_log.csv").exists()
    assert (result.log.loc[result.log["stage"] == 3, "L_W"] == 0.0).all()


def test_training_is_deterministic_across_worker_counts(scenes, tmp_path):
    samples = samples_from_scenes(scenes, with_images=False)
    train_three_stage(samples, small_model(), small_config(jobs=1), tmp_path / "a")
    train_three_stage(samples, small_model(), small_config(jobs=3), tmp_path / "b")
    assert (tmp_path / "a" / "loss_log.csv").read_bytes() == (tmp_path / "b" / "loss_log.csv").read_bytes()
    assert (tmp_path / "a" / "stage3" / "params.bin").read_bytes() == \
        (tmp_path / "b" / "stage3" / "params.bin").read_bytes()


def test_training_updates_decoder_and_registers_scenes(scenes, tmp_path):
    model = small_model()
    before = {k: v.value.copy() for k, v in model.decoder.params.items()}
    train_three_stage(samples_from_scenes(scenes, with_images=False), model, small_config(epochs=1), tmp_path)
    assert not np.array_equal(before["decoder/T"], model.decoder.T.value)
    assert len(model.encoder.table) == 3


def test_tiny_encoder_training_step(scenes, tmp_path):
    config = TrainConfig(stages=[StageConfig(2, epochs=1, batch_size=3)], query_points=32)
    model = small_model("tiny")
    queries = model.encoder.tiny.params["encoder/queries"].value.copy()
    result = Trainer(model, config, tmp_path).train_three_stage(samples_from_scenes(scenes))
    assert len(result.log) == 1
    assert not np.array_equal(queries, model.encoder.tiny.params["encoder/queries"].value)


def test_non_finite_loss_stops_training(scenes, tmp_path):
    model = small_model()
    model.decoder.W.assign(np.full(model.decoder.W.shape, np.nan))
    with pytest.raises(NonFiniteLossError) as info:
        train_three_stage(samples_from_scenes(scenes, with_images=False), model, small_config(), tmp_path)
    assert info.value.checkpoint_path.name == "last_finite"
    assert (info.value.checkpoint_path / "params.bin").exists()
    assert pd.read_csv(tmp_path / "loss_log.csv").empty


def test_model_checkpoint_round_trip(scenes, tmp_path):
    model = small_model()
    model.encoder.table.register_all(s.scene_id for s in scenes)
    model.save(tmp_path / "ckpt", {"seed": 0})
    loaded = FloorplanModel.load(tmp_path / "ckpt")
    assert loaded.decoder_config == model.decoder_config
    for name, param in model.parameters().items():
        np.testing.assert_array_equal(loaded.parameters()[name].value, param.value)
    with pytest.raises(FormatError):
        FloorplanModel.load(tmp_path)


def test_encoder_and_decoder_widths_must_agree():
    with pytest.raises(ConfigError):
        FloorplanModel(EncoderConfig(q=16), DecoderConfig(q=32))


def test_load_samples_from_corpus(scenes, tmp_path):
    for scene in scenes:
        write_scene(scene, tmp_path)
    samples = load_samples(tmp_path, with_images=False)
    assert [s.scene_id for s in samples] == ["scene_0000", "scene_0001", "scene_0002"]
    assert samples[0].image is None
    with pytest.raises(FormatError):
        load_samples(tmp_path / "scene_0000")


def test_stage_one_loss_falls_every_epoch(tmp_path):
    scenes = gen_corpus(5, 4, SceneSpec(min_rooms=1, max_rooms=2))
    config = TrainConfig(stages=[StageConfig(1, epochs=5, batch_size=2, lr=1e-3)], query_points=4096)
    result = train_three_stage(samples_from_scenes(scenes, with_images=False), small_model(), config, tmp_path)
    means = result.log.groupby("epoch")["total"].mean().to_numpy()
    assert len(means) == 5
    assert np.all(np.diff(means) < 0), means


def toy_run(tmp_path, kind="staged", seed=0):
    """Single-room scenes and a narrow decoder, small enough for one pytest case"""
    from src.metrics import evaluate_corpus
    from src.vectorize import extract_floorplan

    scenes = gen_corpus(0, 8, SceneSpec(min_rooms=1, max_rooms=1, diagonal_cut_prob=0.3))
    model = FloorplanModel(EncoderConfig(mode="table", m=2, q=32, seed=seed),
                           DecoderConfig(q=32, l=16, u=8, seed=seed))
    config = TrainConfig(stages=schedule(kind, epochs=60, batch_size=4, lr=5e-3), query_points=512,
                         seed=seed, schedule_kind=kind)
    result = train_three_stage(samples_from_scenes(scenes, with_images=False), model, config,
                               tmp_path / f"{kind}{seed}")
    items = [(s.scene_id, extract_floorplan(model.codes(s.scene_id), model.decoder), s.floorplan)
             for s in scenes]
    return result, evaluate_corpus(items)[0]


@pytest.mark.slow
def test_toy_corpus_reaches_target_quality(tmp_path):
    result, report = toy_run(tmp_path)
    stage2 = result.log[result.log["stage"] == 2].groupby("epoch")["L_rec"].mean()
    assert stage2.iloc[-5:].mean() < stage2.iloc[:5].mean()
    assert report.mean_iou >= 0.80
    assert report.room.f1 >= 0.80
    assert report.corner.recall >= 0.60


@pytest.mark.slow
def test_staged_schedule_beats_joint_on_angles(tmp_path):
    for seed in range(3):
        angle_f1 = {kind: toy_run(tmp_path, kind, seed)[1].angle.f1 for kind in ("staged", "joint")}
        assert angle_f1["joint"] < angle_f1["staged"]
