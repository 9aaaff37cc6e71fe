import json

import requests

from georocket import cli

from gendata import make_citygml, make_geojson


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestDryRun:
    def test_import_transcript(self, capsys, tmp_path):
        f = tmp_path / "city.gml"
        f.write_bytes(b"<r/>")
        code, out, _ = run_cli(
            capsys, "import", str(f), "-l", "/cologne", "-tags", "lod2",
            "-props", "source:nrw", "--dry-run",
        )
        assert code == 0
        assert out == f"POST /store/cologne?tags=lod2&props=source%3Anrw <- {f} (gzip)\n"

    def test_search_transcript(self, capsys):
        code, out, _ = run_cli(capsys, "search", "AND(NOT(LTE(deleted 2018-09-13)) Köln)",
                               "--dry-run")
        assert code == 0
        assert out == (
            "GET /store?search=AND%28NOT%28LTE%28deleted+2018-09-13%29%29+K%C3%B6ln%29\n"
        )

    def test_delete_transcript(self, capsys):
        code, out, _ = run_cli(capsys, "delete", "LT(deleted 2018)", "--dry-run")
        assert code == 0
        assert out == "DELETE /store?search=LT%28deleted+2018%29\n"

    def test_property_set_transcript(self, capsys):
        code, out, _ = run_cli(
            capsys, "property", "set", "-props", "deleted:2018-09-13",
            "AND(Schildergasse Köln)", "--dry-run",
        )
        assert code == 0
        assert out.startswith("PUT /store?search=AND%28Schildergasse+K%C3%B6ln%29")
        assert "properties=deleted%3A2018-09-13" in out

    def test_tag_add_transcript(self, capsys):
        code, out, _ = run_cli(capsys, "tag", "add", "-tags", "historic", "", "--dry-run")
        assert code == 0
        assert out == "PUT /store?search=&tags=historic\n"

    def test_property_rm_transcript(self, capsys):
        code, out, _ = run_cli(capsys, "property", "rm", "-props", "deleted", "x",
                               "--dry-run")
        assert code == 0
        assert out == "DELETE /store?search=x&properties=deleted\n"

    def test_import_with_fallback_crs(self, capsys, tmp_path):
        f = tmp_path / "a.gml"
        f.write_bytes(b"<r/>")
        code, out, _ = run_cli(capsys, "import", str(f), "--fallback-crs",
                               "EPSG:4326", "--dry-run")
        assert code == 0
        assert "fallbackCRS=EPSG%3A4326" in out


class TestUsageErrors:
    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "import", str(tmp_path / "missing.gml"))
        assert code == 1
        assert "no such file" in err

    def test_malformed_property_spec_fails_before_any_request(self, capsys):
        code, _, err = run_cli(capsys, "property", "set", "-props", "deleted", "x",
                               "--url", "http://127.0.0.1:1")
        assert code == 1
        assert "key:value" in err

    def test_delete_refuses_empty_query(self, capsys):
        code, _, err = run_cli(capsys, "delete", "", "--url", "http://127.0.0.1:1")
        assert code == 1
        assert "--all" in err

    def test_unknown_command(self, capsys):
        assert run_cli(capsys, "frobnicate")[0] == 1

    def test_property_requires_subcommand(self, capsys):
        assert run_cli(capsys, "property")[0] == 1

    def test_help_mentions_shell_quoting(self):
        help_text = cli.build_parser().format_help()
        assert "parentheses" in help_text and "backslashes" in help_text


class TestConnectionFailures:
    def test_connection_refused_is_exit_3(self, capsys, tmp_path):
        f = tmp_path / "x.gml"
        f.write_bytes(b"<r/>")
        code, _, err = run_cli(capsys, "import", str(f), "--url", "http://127.0.0.1:9")
        assert code == 3
        assert "connection error" in err

    def test_search_connection_refused(self, capsys):
        code, _, _ = run_cli(capsys, "search", "x", "--url", "http://127.0.0.1:9")
        assert code == 3


class TestAgainstLiveServer:
    def test_import_prints_chunk_counts(self, capsys, tmp_path, server):
        f = tmp_path / "city.gml"
        f.write_bytes(make_citygml(3))
        code, out, _ = run_cli(capsys, "import", str(f), "-l", "/cologne",
                               "--url", server.url)
        assert code == 0
        assert out == f"{f}: 4 chunks\n"  # three members plus the envelope

    def test_multiple_files_one_layer(self, capsys, tmp_path, server):
        a = tmp_path / "a.gml"
        a.write_bytes(make_citygml(1))
        b = tmp_path / "b.json"
        b.write_bytes(make_geojson(2))
        code, out, _ = run_cli(capsys, "import", str(a), str(b), "-l", "/city",
                               "--url", server.url)
        assert code == 0
        assert f"{a}: 2 chunks" in out and f"{b}: 2 chunks" in out
        # exporting a mix of XML and GeoJSON chunks in one document is rejected
        resp = requests.get(server.url + "/store/city?search=")
        assert resp.status_code == 409
        # a query hitting only one format still exports fine
        resp = requests.get(server.url + "/store/city?search=Hauptstrasse")
        assert resp.status_code == 200
        assert len(json.loads(resp.content)["features"]) == 2

    def test_search_writes_document_to_stdout(self, capsys, tmp_path, server):
        f = tmp_path / "data.json"
        f.write_bytes(make_geojson(2))
        assert run_cli(capsys, "import", str(f), "--url", server.url)[0] == 0
        code, out, _ = run_cli(capsys, "search", "", "--url", server.url)
        assert code == 0
        assert len(json.loads(out)["features"]) == 2

    def test_search_to_output_file(self, capsys, tmp_path, server):
        f = tmp_path / "data.json"
        f.write_bytes(make_geojson(1))
        run_cli(capsys, "import", str(f), "--url", server.url)
        out_path = tmp_path / "export.json"
        code, out, _ = run_cli(capsys, "search", "", "-o", str(out_path),
                               "--url", server.url)
        assert code == 0 and out == ""
        assert len(json.loads(out_path.read_bytes())["features"]) == 1

    def test_property_and_tag_and_delete_workflow(self, capsys, tmp_path, server):
        f = tmp_path / "data.json"
        f.write_bytes(make_geojson(4))
        run_cli(capsys, "import", str(f), "--url", server.url)

        code, out, _ = run_cli(capsys, "property", "set", "-props",
                               "deleted:2017-06-30", "building", "--url", server.url)
        assert code == 0 and out.strip() == "4"

        code, out, _ = run_cli(capsys, "tag", "add", "-tags", "historic", "",
                               "--url", server.url)
        assert code == 0 and out.strip() == "4"

        code, out, _ = run_cli(capsys, "property", "rm", "-props", "deleted",
               "historic", "--url", server.url)
        assert code == 0 and out.strip() == "4"

        code, out, _ = run_cli(capsys, "delete", "LT(deleted 2018)", "--url", server.url)
        assert code == 0 and out.strip() == "0"  # property was removed again

        code, out, _ = run_cli(capsys, "delete", "", "--all", "-l", "/",
                               "--url", server.url)
        assert code == 0 and out.strip() == "4"

    def test_server_error_is_exit_2_with_diagnostics(self, capsys, server):
        code, _, err = run_cli(capsys, "search", "AND(", "--url", server.url)
        assert code == 2
        assert "PARSE_ERROR" in err and "byte" in err

    def test_failed_import_is_exit_2(self, capsys, tmp_path, server):
        f = tmp_path / "broken.gml"
        f.write_bytes(b"<r><a></r>")
        code, _, err = run_cli(capsys, "import", str(f), "--url", server.url)
        assert code == 2

    def test_env_var_url(self, capsys, tmp_path, server, monkeypatch):
        monkeypatch.setenv("GEOROCKET_URL", server.url)
        f = tmp_path / "data.json"
        f.write_bytes(make_geojson(1))
        assert run_cli(capsys, "import", str(f))[0] == 0
