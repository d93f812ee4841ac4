"""Exercise the poster_engine extension end to end.

    pip install --no-build-isolation -e crates/python
    python python/smoke_test.py
"""

import io
import json
import sys
import tempfile
from pathlib import Path

import poster_engine as pe


def png_size(data):
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    return int.from_bytes(data[16:20], "big"), int.from_bytes(data[20:24], "big")


def main():
    engine = pe.Engine({"canvas_width": 240, "canvas_height": 340, "seed": 3})
    request = {
        "background_prompt": "autumn park",
        "items": [
            {"role": "title", "content": "Fête d'Automne"},
            {"role": "subtitle", "content": "music & food"},
            {"role": "information", "content": "Oct 3, 5pm"},
        ],
    }
    doc, png, diags = engine.generate(request)
    again, png2, _ = engine.generate(json.dumps(request))
    assert png == png2 and doc == again, "generation is not deterministic"
    assert png_size(png) == (240, 340)
    assert doc.element_ids == ["title", "subtitle-1", "information-1"]
    assert doc.has_art_layer("title")

    text = doc.to_json()
    assert pe.Document.from_json(text).to_json() == text
    assert engine.render(doc) == png

    moved = engine.edit(doc, {"op": "move_box", "id": "title", "dx": 4, "dy": 0})
    assert not moved.has_art_layer("title")
    try:
        engine.edit(doc, {"op": "move_box", "id": "title", "dx": 10**6, "dy": 0})
        raise AssertionError("out-of-bounds edit accepted")
    except pe.PosterError as e:
        assert "not inside" in str(e), e

    styled = engine.stylize(moved, "title", "copper foil")
    assert styled.has_art_layer("title")

    report = engine.evaluate([doc, styled])
    assert report["recall"] == 1.0 and report["precision"] == 1.0, report
    assert pe.text_prf("Hello hello", "hello world")["recall"] == 0.5

    session = engine.session(doc)
    session.edit([{"op": "set_color", "id": "subtitle-1", "color": "#FF0000"}])
    session.edit({"op": "set_content", "id": "information-1", "content": "Oct 4"})
    assert session.revision == 2
    assert session.snapshot()["elements"][2]["content"] == "Oct 4"
    session.undo(0)
    assert session.document() == session.document(0)
    assert png_size(session.preview()) == (240, 340)

    try:
        engine.generate({"items": []})
        raise AssertionError("empty request accepted")
    except ValueError:
        pass

    with tempfile.TemporaryDirectory() as tmp:
        d = Path(tmp)
        (d / "bg.png").write_bytes(png)
        element = {"role": "title", "content": "T", "x": 0, "y": 0, "box_width": 50,
                   "box_height": 20, "font_id": "sans", "font_size": 16.0,
                   "color": "#000000", "alignment": "left", "rotation_deg": 0.0}
        good = {"background_ref": "bg.png", "user_description": "d", "elements": [element]}
        bad = json.loads(json.dumps(good))
        bad["elements"][0]["box_width"] = 5000
        (d / "good.json").write_text(json.dumps(good))
        (d / "bad.json").write_text(json.dumps(bad))
        (d / "m.json").write_text(json.dumps({"kind": "design", "records": ["good.json", "bad.json"]}))
        diags = pe.validate_dataset(str(d / "m.json"))
        assert [x["rule"] for x in diags] == ["box_out_of_bounds"], diags
        jsonl, exported, excluded = pe.export_finetune(str(d / "m.json"))
        assert (exported, excluded) == (1, 1) and len(jsonl.splitlines()) == 1

    print("poster_engine smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
