import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jipdatrack.appearance import similarity_histograms
from jipdatrack.config import INVENTED_DEFAULTS, PUBLISHED_DEFAULTS, discover_sequences, load_config
from jipdatrack.errors import ConfigError, FormatError, ParseError
from jipdatrack.formats import (
    ResultRow,
    read_detections,
    read_embeddings,
    read_keyvalue,
    read_results,
    write_embeddings,
    write_results,
)
from jipdatrack.sim import ScenarioSpec, generate


def write(path, text):
    path.write_text(text)
    return path


def test_parse_point_and_box(tmp_path):
    p = write(tmp_path / "det.txt", "1,-1,10,20,30,60,0.97,5.1,3.2,0\n")
    (d,) = read_detections(p)
    assert d.frame == 1 and d.confidence == 0.97
    np.testing.assert_array_equal(d.position, [5.1, 3.2])
    assert d.box == (10, 20, 30, 60)


def test_parse_box_foot_fallback(tmp_path):
    p = write(tmp_path / "det.txt", "1,-1,10,20,30,60,0.97,-1,-1,-1\n2,-1,10,20,30,60,0.9\n")
    a, b = read_detections(p)
    np.testing.assert_array_equal(a.position, [25, 80])
    np.testing.assert_array_equal(b.position, [25, 80])


def test_confidence_filter_keeps_row_index(tmp_path):
    p = write(tmp_path / "det.txt", "1,-1,0,0,2,2,0.5,1,1,0\n1,-1,0,0,2,2,0.99,2,2,0\n")
    (d,) = read_detections(p, conf_threshold=0.95)
    assert d.embedding_index == 1


def test_malformed_line_reports_line_number(tmp_path):
    p = write(tmp_path / "det.txt", "1,-1,0,0,2,2,0.5,1,1,0\n\n1,-1,zero,0,2,2,0.5,1,1,0\n")
    with pytest.raises(ParseError) as info:
        read_detections(p)
    assert info.value.line_no == 3
    assert ":3" in str(info.value)
    with pytest.raises(ParseError):
        read_detections(write(tmp_path / "short.txt", "1,2,3\n"))
    with pytest.raises(ParseError):
        read_detections(write(tmp_path / "frame0.txt", "0,-1,0,0,2,2,0.5,1,1,0\n"))


def test_empty_file_is_empty_sequence(tmp_path):
    assert read_detections(write(tmp_path / "det.txt", "")) == []
    assert read_results(write(tmp_path / "res.txt", "\n")) == []


coord = st.floats(-1e4, 1e4, allow_nan=False).filter(lambda v: v not in (0.0, -1.0))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 50), st.integers(1, 20), coord, coord, st.floats(0, 1)),
                max_size=20, unique_by=lambda t: (t[0], t[1])))
def test_results_round_trip(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "res.txt"
    original = [ResultRow(f, i, (x, y), None, c) for f, i, x, y, c in rows]
    write_results(path, original)
    back = read_results(path)
    assert back == sorted(original, key=lambda r: (r.frame, r.track_id))


def test_embeddings_round_trip_and_dimension_check(tmp_path):
    rng = np.random.default_rng(0)
    table = {(1, 0): rng.standard_normal(5), (2, 3): rng.standard_normal(5)}
    table = {k: v / np.linalg.norm(v) for k, v in table.items()}
    write_embeddings(tmp_path / "e.txt", table)
    back = read_embeddings(tmp_path / "e.txt")
    assert set(back) == set(table)
    np.testing.assert_allclose(back[(2, 3)], table[(2, 3)], atol=1e-15)
    with pytest.raises(FormatError):
        read_embeddings(write(tmp_path / "bad.txt", "1,0,1,0\n1,1,1,0,0\n"))
    with pytest.raises(ParseError):
        read_embeddings(write(tmp_path / "zero.txt", "1,0,0,0\n"))


def test_keyvalue_comments(tmp_path):
    kv = read_keyvalue(write(tmp_path / "c.ini", "[Sequence]\n# note\nname=A  # inline\n; other\nseqLength=5\n"))
    assert kv == {"name": "A", "seqLength": "5"}


def test_empty_config_is_published_operating_point():
    cfg = load_config()
    for key, value in PUBLISHED_DEFAULTS.items():
        assert cfg[key] == value
        assert cfg.sources[key] == "published"
    p = cfg.jipda_params(volume=100.0)
    assert (p.P_S, p.P_D, p.P_G) == (0.999, 0.99, 0.99)
    assert p.clutter_density == pytest.approx(0.15)
    assert cfg.motion().dt == 0.04


def test_config_file_override_and_unknown_key(tmp_path):
    path = write(tmp_path / "run.cfg", "P_D=0.9\nmode = gnn\nshiny_new_knob=3\n")
    cfg = load_config(path)
    assert cfg["p_d"] == 0.9 and cfg.sources["p_d"] == "override"
    assert cfg.mode == "gnn"
    assert any("shiny_new_knob" in w for w in cfg.warnings)
    dump = cfg.dump()
    assert "p_d=0.9  # override" in dump
    assert "shiny_new_knob" in dump
    assert set(INVENTED_DEFAULTS) <= {line.split("=")[0] for line in dump.splitlines() if "=" in line and not line.startswith("#")}


def test_dump_reloads_to_same_values(tmp_path):
    cfg = load_config(overrides={"p_s": 0.95})
    again = load_config(write(tmp_path / "eff.cfg", cfg.dump()))
    assert again.values == cfg.values


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        load_config(overrides={"mode": "magic"})
    with pytest.raises(ConfigError):
        load_config(overrides={"p_d": 1.5})
    with pytest.raises(ConfigError):
        discover_sequences(tmp_path / "nowhere")
    with pytest.raises(ConfigError):
        discover_sequences(tmp_path)


def test_noiseless_embeddings_fill_top_bin():
    sc = generate(ScenarioSpec(seed=2, duration=30, n_targets=3, clutter_rate=0.0, P_D=1.0,
                               embedding_noise=0.0, embedding_dim=16))
    obs = {}
    for (frame, index), emb in sc.gt_embeddings.items():
        obs.setdefault(frame, {})[index] = emb
    h = similarity_histograms(obs, lags=[1, 5])
    for name in ("lag1", "lag5"):
        assert h.counts[name][-1] == h.counts[name].sum() > 0
