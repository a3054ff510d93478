// Line-delimited JSON parse server around the vendored acorn bundle.
//
// Request:  {"id": <int>, "source": <string>}
// Response: {"id": <int>, "ok": true, "ast": <ESTree Program>}
//        or {"id": <int>, "ok": false, "error": <string>}
//
// Sources are tried as classic scripts first, then as ES modules, so both
// CommonJS bundles and ESM output parse. Node positions are character
// offsets (acorn's start/end).

"use strict";

const path = require("path");
const readline = require("readline");
const acorn = require(path.join(__dirname, "acorn.js"));

const BASE_OPTIONS = {
  ecmaVersion: "latest",
  allowHashBang: true,
  allowReturnOutsideFunction: true,
  locations: false,
};

function parseAny(source) {
  try {
    return acorn.parse(source, { ...BASE_OPTIONS, sourceType: "script" });
  } catch (scriptErr) {
    try {
      return acorn.parse(source, { ...BASE_OPTIONS, sourceType: "module" });
    } catch (moduleErr) {
      throw scriptErr;
    }
  }
}

const rl = readline.createInterface({ input: process.stdin, terminal: false });

rl.on("line", (line) => {
  if (!line.trim()) return;
  let req;
  try {
    req = JSON.parse(line);
  } catch (e) {
    process.stdout.write(JSON.stringify({ id: -1, ok: false, error: "bad request: " + e.message }) + "\n");
    return;
  }
  try {
    const ast = parseAny(req.source);
    process.stdout.write(JSON.stringify({ id: req.id, ok: true, ast: ast }) + "\n");
  } catch (e) {
    process.stdout.write(JSON.stringify({ id: req.id, ok: false, error: String(e.message || e) }) + "\n");
  }
});

rl.on("close", () => process.exit(0));
