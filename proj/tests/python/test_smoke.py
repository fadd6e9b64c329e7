"""Smoke tests for the packetlm python bindings."""

import json
import math

import pytest

import packetlm


@pytest.fixture(scope="module")
def schema():
    return packetlm.synth_schema()


def test_schema_loads_and_reports_shape(schema):
    assert schema.num_fields() == 4
    assert schema.num_classes() == 4
    assert schema.seq_len == 64
    parsed = json.loads(schema.to_json())
    assert parsed["schema_version"] == 1
    assert len(parsed["fields"]) == 4


def test_vocabulary_layout(schema):
    vocab = packetlm.build_vocabulary(schema)
    assert vocab.sep_base == 10
    assert vocab.sep_count == 4
    assert vocab.label_base == 14
    assert vocab.label_count == 4
    assert vocab.pad_id == 18
    assert vocab.size == 19


def test_tokenize_golden_and_round_trip(schema):
    two_field = packetlm.Schema.from_json(
        json.dumps(
            {
                "schema_version": 1,
                "seq_len": 12,
                "max_numeric_len": 8,
                "labels": [f"c{i}" for i in range(12)],
                "fields": [
                    {"name": "a", "kind": "int", "max_digits": 3},
                    {"name": "b", "kind": "int", "max_digits": 2},
                ],
            }
        )
    )
    tp = packetlm.tokenize(two_field, ["406", "22"], 3)
    assert tp.token_ids[:8] == [6, 0, 4, 10, 2, 2, 11, 15]
    assert tp.numeric_pos[:3] == [0, 1, 2]
    assert tp.label_pos == 7
    fields, label = packetlm.detokenize(two_field, tp)
    assert fields == ["406", "22"]
    assert label == 3


def test_normalize_field_errors(schema):
    desc = schema.fields[0]
    assert packetlm.normalize_field("40000", desc) == "40000"
    with pytest.raises(packetlm.PacketLmError):
        packetlm.normalize_field("-1", desc)


def test_synth_rule_self_consistency():
    records = packetlm.synth_generate(50, seed=9)
    assert len(records) == 50
    for fields, label in records:
        assert packetlm.synth_label_rule(fields) == label


def test_metrics_match_hand_values():
    cm = packetlm.confusion([0, 0, 1], [0, 1, 1], 2)
    assert cm.tolist() == [[1, 1], [0, 1]]
    report = packetlm.prf_report([0, 0, 1], [0, 1, 1], ["a", "b"])
    row_a = report["per_class"][0]
    assert row_a["precision"] == 1.0
    assert row_a["recall"] == 0.5
    assert math.isclose(report["accuracy"], 2 / 3)


def test_train_predict_evaluate_attention(tmp_path, schema):
    records = packetlm.synth_generate(400, seed=3)
    config = {
        "epochs": 2,
        "base_lr": 5e-3,
        "batch_size": 32,
        "seed": 1,
        "model": {"n_layers": 1, "n_heads": 2, "emb_size": 16},
    }
    ckpt = packetlm.train_records(schema, records, config)
    assert ckpt.epochs_completed() == 2
    assert ckpt.parameter_count() > 0

    pred = ckpt.predict(["45000", "17", "100", "2000"])
    assert pred["class_id"] in range(4)
    assert math.isclose(sum(pred["probabilities"]), 1.0, abs_tol=1e-5)

    result = ckpt.evaluate(records[:100])
    assert len(result["predictions"]) == 100
    assert 0.0 <= result["accuracy"] <= 1.0
    assert len(result["per_class"]) == 4

    attn = ckpt.attention(["45000", "17", "100", "2000"], mode="mean-over-heads")
    assert attn["field_names"] == ["src_port", "dst_port", "length", "window", "label"]
    entry = attn["entries"][0]
    field = entry["field"]
    assert field.shape == (5, 5)
    for row in field:
        assert math.isclose(row.sum(), 1.0, abs_tol=1e-5)

    # checkpoints survive a disk round trip
    path = tmp_path / "model.ckpt"
    ckpt.save(str(path))
    loaded = packetlm.Checkpoint.load(str(path))
    pred2 = loaded.predict(["45000", "17", "100", "2000"])
    assert pred2["class_id"] == pred["class_id"]
    assert pred2["probabilities"] == pred["probabilities"]
