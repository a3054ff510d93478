"""Package ingestion: archives, directories, manifest extraction."""

from __future__ import annotations

import pytest

from tests.conftest import make_package_dir, make_vsix
from vsxscan.errors import ManifestMissing, ManifestUnparseable, NotAnArchive
from vsxscan.ingest import (
    SOURCE_BYTE_CAP,
    _collect_sources,
    build_manifest,
    foreign_command_listeners,
    load_package,
    parse_manifest_text,
    requested_commands,
    requested_configurations,
    unpack_vsix,
)


def test_unpack_round_trips_publisher_and_name(tmp_path):
    path = make_vsix(
        tmp_path / "a.vsix",
        {"publisher": "easycode", "name": "easycode", "version": "2.1.0"},
        {"out/main.js": "const x = 1;"},
    )
    package = unpack_vsix(path)
    assert package.extension_id == "easycode.easycode"
    assert package.version == "2.1.0"
    assert [p for p, _ in package.sources.files] == ["out/main.js"]


def test_unpack_no_contributions_yields_empty_lists(tmp_path):
    path = make_vsix(tmp_path / "a.vsix", {"publisher": "p", "name": "n"})
    package = unpack_vsix(path)
    assert package.manifest.commands == []
    assert package.manifest.configurations == []


def test_node_modules_entries_are_skipped(tmp_path):
    path = make_vsix(
        tmp_path / "a.vsix",
        {"publisher": "p", "name": "n"},
        {"node_modules/x.js": "evil()", "lib/ok.js": "fine()"},
    )
    package = unpack_vsix(path)
    assert [p for p, _ in package.sources.files] == ["lib/ok.js"]
    assert ("node_modules/x.js", "node_modules") in package.sources.skipped


def test_non_script_assets_ignored_entirely(tmp_path):
    path = make_vsix(
        tmp_path / "a.vsix",
        {"publisher": "p", "name": "n"},
        {"README.md": "# hi", "icon.png.js": "x()", "main.mjs": "y()", "a.cjs": "z()"},
    )
    package = unpack_vsix(path)
    names = [p for p, _ in package.sources.files]
    assert "README.md" not in names
    assert set(names) == {"icon.png.js", "main.mjs", "a.cjs"}


def test_not_an_archive(tmp_path):
    bogus = tmp_path / "not.vsix"
    bogus.write_text("plain text")
    with pytest.raises(NotAnArchive):
        unpack_vsix(bogus)


def test_missing_path_raises_io_error(tmp_path):
    with pytest.raises(FileNotFoundError):
        unpack_vsix(tmp_path / "absent.vsix")


def test_manifest_missing(tmp_path):
    import zipfile

    path = tmp_path / "a.vsix"
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("extension/readme.txt", "no manifest here")
    with pytest.raises(ManifestMissing):
        unpack_vsix(path)


def test_manifest_unparseable(tmp_path):
    import zipfile

    path = tmp_path / "a.vsix"
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("extension/package.json", "{{{definitely not json")
    with pytest.raises(ManifestUnparseable):
        unpack_vsix(path)


def test_lenient_manifest_parse_comments_and_trailing_commas():
    text = """
    {
      // extension metadata
      "publisher": "p", /* block */
      "name": "n",
      "contributes": {
        "commands": [
          {"command": "p.go", "title": "Go",},
        ],
      },
    }
    """
    data = parse_manifest_text(text)
    assert data["publisher"] == "p"
    assert data["contributes"]["commands"][0]["command"] == "p.go"


def test_lenient_parse_does_not_touch_strings():
    data = parse_manifest_text('{"name": "a//b, }", "publisher": "x"}')
    assert data["name"] == "a//b, }"


def test_directory_package_both_layouts(tmp_path):
    nested = make_package_dir(tmp_path / "nested", {"publisher": "a", "name": "b"}, {"x.js": "1;"})
    flat = make_package_dir(
        tmp_path / "flat", {"publisher": "c", "name": "d"}, {"x.js": "1;"}, nested=False
    )
    assert load_package(nested).extension_id == "a.b"
    assert load_package(flat).extension_id == "c.d"


def test_directory_without_manifest(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(ManifestMissing):
        load_package(empty)


def test_requested_commands_dedup_keeps_first():
    manifest = build_manifest(
        {
            "contributes": {
                "commands": [
                    {"command": "x.run", "title": "First"},
                    {"command": "x.run", "title": "Second"},
                    {"command": "x.stop", "title": "Stop", "category": "X"},
                ]
            }
        }
    )
    commands = requested_commands(manifest)
    assert [(c.command_id, c.title) for c in commands] == [("x.run", "First"), ("x.stop", "Stop")]
    assert commands[1].category == "X"


def test_requested_commands_listing6_id():
    manifest = build_manifest(
        {"contributes": {"commands": [{"command": "codegpt.removeApiKeyCodeGPT"}]}}
    )
    commands = requested_commands(manifest)
    assert len(commands) == 1
    assert commands[0].command_id == "codegpt.removeApiKeyCodeGPT"
    assert commands[0].title == ""


def test_requested_commands_absent_contribution_point():
    assert requested_commands(build_manifest({})) == []


def test_requested_configurations_single_block():
    manifest = build_manifest(
        {
            "contributes": {
                "configuration": {
                    "title": "EasyCode",
                    "properties": {
                        "easycode.openAI ApiKey": {
                            "type": "string",
                            "description": "Your OpenAI Api Key",
                        }
                    },
                }
            }
        }
    )
    configs = requested_configurations(manifest)
    assert len(configs) == 1
    assert configs[0].key == "easycode.openAI ApiKey"
    assert configs[0].description == "Your OpenAI Api Key"
    assert configs[0].value_type == "string"
    assert configs[0].default_present is False


def test_requested_configurations_list_of_blocks_and_webhook():
    manifest = build_manifest(
        {
            "contributes": {
                "configuration": [
                    {
                        "properties": {
                            "discordCodeShare.webhook": {
                                "description": "Webhook used to deliver your code to."
                            }
                        }
                    },
                    {"properties": {"other.flag": {"type": "boolean", "default": True}}},
                ]
            }
        }
    )
    configs = requested_configurations(manifest)
    assert [c.key for c in configs] == ["discordCodeShare.webhook", "other.flag"]
    assert configs[0].description == "Webhook used to deliver your code to."
    assert configs[1].default_present is True


def test_requested_configurations_zero_properties():
    manifest = build_manifest({"contributes": {"configuration": {"title": "Empty"}}})
    assert requested_configurations(manifest) == []


def test_foreign_command_listeners_listing5():
    manifest = build_manifest({"activationEvents": ["onCommand:github.copilot.generate"]})
    assert foreign_command_listeners(manifest, manifest.commands) == ["github.copilot.generate"]


def test_foreign_command_listeners_own_command_excluded():
    manifest = build_manifest(
        {
            "activationEvents": ["onCommand:my.own"],
            "contributes": {"commands": [{"command": "my.own", "title": "Mine"}]},
        }
    )
    assert foreign_command_listeners(manifest, manifest.commands) == []


def test_foreign_command_listeners_non_command_events_ignored():
    manifest = build_manifest({"activationEvents": ["onLanguage:python", "onStartupFinished"]})
    assert foreign_command_listeners(manifest, manifest.commands) == []


def test_listener_intersection_with_own_commands_is_empty():
    manifest = build_manifest(
        {
            "activationEvents": [
                "onCommand:a.x",
                "onCommand:b.y",
                "onCommand:a.x",
                "onCommand:mine.z",
            ],
            "contributes": {"commands": [{"command": "mine.z", "title": "Z"}]},
        }
    )
    listeners = foreign_command_listeners(manifest, manifest.commands)
    assert listeners == ["a.x", "b.y"]
    assert set(listeners) & {c.command_id for c in manifest.commands} == set()


def test_unpack_is_deterministic(tmp_path):
    manifest = {
        "publisher": "p",
        "name": "n",
        "contributes": {"commands": [{"command": "p.c", "title": "C"}]},
    }
    files = {"b.js": "const b = 2;", "a.js": "const a = 1;"}
    first = unpack_vsix(make_vsix(tmp_path / "one.vsix", manifest, files))
    second = unpack_vsix(make_vsix(tmp_path / "two.vsix", manifest, files))
    assert first.sources == second.sources
    assert first.manifest.commands == second.manifest.commands


def test_size_cap_drops_largest_first():
    small = [(f"s{i}.js", b"x" * 10) for i in range(3)]
    big = [("big1.js", b"y" * 90), ("big2.js", b"z" * 80)]
    sources = _collect_sources(small + big, cap=100)
    kept = {p for p, _ in sources.files}
    dropped = {p for p, reason in sources.skipped if reason == "size-cap"}
    assert dropped == {"big1.js", "big2.js"}
    assert kept == {"s0.js", "s1.js", "s2.js"}
    assert sum(len(c) for _, c in sources.files) <= 100


def test_size_cap_default_allows_normal_packages():
    sources = _collect_sources([("a.js", b"x" * 1000)], cap=SOURCE_BYTE_CAP)
    assert len(sources.files) == 1


def test_extension_id_dots_sanitized(tmp_path):
    path = make_vsix(tmp_path / "a.vsix", {"publisher": "a.b", "name": "c.d"})
    package = unpack_vsix(path)
    assert package.extension_id.count(".") == 1
    assert package.extension_id == "a-b.c-d"
