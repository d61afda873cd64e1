#!/usr/bin/env python3
# Copyright 2026 The GenXSS Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes the deterministic test corpora and rulesets under fixtures/.

Payload families are built by enumeration, so rerunning the script gives
byte-identical files. Run from anywhere:

    python3 tools/fixtures/make_fixtures.py
"""

import itertools
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = ROOT / "fixtures"


def record(pid, raw, attack_type, source="manual", validation="unchecked", outcome="untested"):
    rec = {"id": pid, "raw": raw}
    if attack_type is not None:
        rec["attack_type"] = attack_type
    rec["source"] = source
    rec["validation"] = validation
    rec["waf_outcome"] = outcome
    return rec


def write_jsonl(name, records):
    write_jsonl_to(OUT / name, records)


def write_jsonl_to(path, records):
    records = sorted(records, key=lambda r: r["id"])
    text = "".join(json.dumps(r, ensure_ascii=False, separators=(",", ":")) + "\n" for r in records)
    path.write_text(text, encoding="utf-8")


def take(gen, n):
    items = list(dict.fromkeys(gen))
    if len(items) < n:
        raise SystemExit(f"family too small: {len(items)} < {n}")
    return items[:n]


# --- attack families ---------------------------------------------------------

FUNCS = ["alert", "confirm", "prompt", "print"]
ARGS = ["1", "0", "42", "1337", "'xss'", "'XSS'", "origin", "'gen'"]
# (prefix, suffix) pairs that leave a double-quoted JS string and end cleanly.
FRAMES = [('";', ";//"), ('"-', '-"'), ('"+', '+"'), ('\\";', "//"), ("%22;", ";//"), ('red";', "//")]

UNICODE_FORMS = {
    "alert": ["\\u0061\\u006c\\u0065\\u0072\\u0074", "\\u0061lert", "al\\u0065rt", "\\u{61}lert", "aler\\u0074"],
    "confirm": ["\\u0063onfirm", "conf\\u0069rm", "\\u0063\\u006f\\u006e\\u0066\\u0069\\u0072\\u006d", "confir\\u{6d}"],
    "prompt": ["\\u0070rompt", "pr\\u006fmpt", "promp\\u0074", "\\u{70}rompt"],
    "print": ["\\u0070rint", "pr\\u0069nt", "prin\\u0074"],
}


def plain_calls():
    # Blocked by the baseline rules: a literal `name(`.
    for (pre, suf), f, a in itertools.product(FRAMES, FUNCS, ARGS):
        yield pre + f + "(" + a + ")" + suf


def percent_u_calls():
    # %uXXXX survives form decoding and is undone by t:urlDecodeUni.
    for (pre, suf), f, a in itertools.product(FRAMES[:3], ["alert", "confirm", "prompt"], ARGS):
        yield pre + "%u00" + format(ord(f[0]), "x") + f[1:] + "(" + a + ")" + suf


def newline_calls():
    for (pre, suf), f, a in itertools.product(FRAMES[:3], ["alert", "prompt"], ARGS):
        yield pre + f + "%0a(" + a + ")" + suf


def eval_calls():
    for (pre, suf), a in itertools.product(FRAMES, ["'\\x61lert(1)'", "'\\x63onfirm(1)'", "atob('YWxlcnQoMSk=')"]):
        yield pre + "eval(" + a + ")" + suf


def unicode_calls():
    for f, form_list in UNICODE_FORMS.items():
        for form, (pre, suf), a in itertools.product(form_list, FRAMES, ARGS):
            yield pre + form + "(" + a + ")" + suf


def comment_calls():
    for (pre, suf), f, a, c in itertools.product(FRAMES, FUNCS, ARGS, ["/**/", "/*x*/", "/*xss*/"]):
        yield pre + f + c + "(" + a + ")" + suf


def double_encoded_calls():
    for f, form_list in UNICODE_FORMS.items():
        for form, a in itertools.product(form_list, ARGS):
            yield "%2522;" + form + "(" + a + ");//"


def timer_calls():
    for t, f, a, (pre, suf) in itertools.product(["setTimeout", "setInterval"], ["\\u0061lert", "\\u0063onfirm", "\\u0070rompt"], ARGS, FRAMES[:4]):
        yield pre + t + "('" + f + "(" + a + ")')" + suf


def template_calls():
    # Tagged template calls; nothing in the generated rules looks for them.
    for f, (pre, suf), a in itertools.product(["alert", "confirm", "\\u0061lert", "pr\\u006fmpt"], FRAMES, ["1", "xss", "0"]):
        yield pre + f + "`" + a + "`" + suf


def dom_plain():
    for f, a in itertools.product(FUNCS, ARGS):
        yield "javascript:" + f + "(" + a + ")"


def dom_tag():
    for tag, ev, f in itertools.product(["svg", "img src=x", "body"], ["onload", "onerror"], ["alert(1)", "confirm(1)"]):
        yield '"><' + tag + " " + ev + "=" + f + ">"


def dom_tab_scheme():
    for sep, form, a in itertools.product(["%09", "%0a", "%0d"], ["\\u0061lert", "\\u0063onfirm", "\\u0070rompt", "al\\u0065rt"], ["1", "0"]):
        yield "java" + sep + "script:" + form + "(" + a + ")"


def dom_entity_scheme():
    for ent, form, a in itertools.product(["&#106;", "&#x6a;"], ["\\u0061lert", "\\u0063onfirm", "\\u0070rompt", "pr\\u0069nt"], ["1", "0"]):
        yield ent + "avascript:" + form + "(" + a + ")"


def attack_sets():
    blocked_ref = take(plain_calls(), 14) + take(percent_u_calls(), 6) + take(newline_calls(), 4) + take(eval_calls(), 6)
    bypass_ref = (
        take(unicode_calls(), 56)
        + take(comment_calls(), 28)
        + take(double_encoded_calls(), 12)
        + take(timer_calls(), 28)
        + take(template_calls(), 24)
    )
    blocked_dom = take(dom_plain(), 8) + take(dom_tag(), 8)
    bypass_dom = take(dom_tab_scheme(), 16) + take(dom_entity_scheme(), 10)
    return blocked_ref, bypass_ref, blocked_dom, bypass_dom


# --- benign samples ------------------------------------------------------------

WORDS = [
    "shoes", "red dress", "laptop", "coffee beans", "garden hose", "camping tent", "running shorts",
    "winter jacket", "usb cable", "desk lamp", "yoga mat", "water bottle", "phone case", "headphones",
    "notebook", "backpack", "sunglasses", "bicycle helmet", "kitchen knife", "table cloth",
]
CITIES = ["new york", "berlin", "sao paulo", "tokyo", "lagos", "montreal", "cafe%20paris", "san%20jose", "st.+louis", "o'hare"]
TEMPLATES = [
    "{w} in {c}", "{w} sale {c}", "best {w} {c}", "{w}+reviews+{c}", "cheap {w} near {c}",
    "{w} size 42 {c}", "{w} & accessories, {c}", "{w} (blue) {c}", "how to clean a {w}? {c}", "{w} under $50 {c}",
]
EXTRA = [
    "john.doe@example.com", "2024-05-17", "page=2", "42", "-1", "100%25 cotton", "C%2B%2B tutorial",
    "rock+%26+roll", "what is 2+2?", "<3 love it", "50% off", "x=1;y=2", "a/b testing", "user_42",
    "O'Reilly books", "semi;colon", "\"quoted phrase\"", "tab%09separated", "first, second, third",
    "script writing class", "javascript tutorial", "confirmation number 8812", "print shop near me",
    "prompt delivery", "on sale now", "alerts and notifications", "evaluation form", "document archive",
]


def benign_values():
    for t, w, c in itertools.product(TEMPLATES, WORDS, CITIES):
        yield t.format(w=w, c=c)


def benign_set(n):
    values = list(EXTRA)
    for v in benign_values():
        if len(values) >= n:
            break
        if v not in values:
            values.append(v)
    return values[:n]


# --- rulesets ----------------------------------------------------------------------

MINI_CRS = """\
# Baseline rule set in the style of a generic XSS signature set.
# Each rule inspects query arguments after a fixed transformation chain.

# Script tags
SecRule ARGS "@rx <script[\\s>/]" "id:941110,phase:2,deny,status:403,t:urlDecodeUni,t:htmlEntityDecode,t:lowercase,msg:'XSS script tag',severity:'CRITICAL'"

# Event handler attributes
SecRule ARGS "@rx \\bon(?:error|load|click|mouseover|focus|toggle)\\s*=" "id:941120,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS event handler',severity:'CRITICAL'"

# javascript: scheme
SecRule ARGS "@rx javascript\\s*:" "id:941130,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS javascript scheme',severity:'CRITICAL'"

# vbscript: scheme
SecRule ARGS "@contains vbscript:" "id:941140,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS vbscript scheme',severity:'CRITICAL'"

# Dangerous tags
SecRule ARGS "@rx <(?:iframe|img|svg|object|embed|body|video|audio|math|details)\\b" "id:941160,phase:2,deny,status:403,t:urlDecodeUni,t:htmlEntityDecode,t:lowercase,msg:'XSS dangerous tag',severity:'CRITICAL'"

# Dialog functions called directly
SecRule ARGS "@rx (?:alert|confirm|prompt)\\s*\\(" "id:941170,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS dialog call',severity:'CRITICAL'"

# eval and Function
SecRule ARGS "@rx \\b(?:eval|function)\\s*\\(" "id:941180,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS eval',severity:'CRITICAL'"

# DOM sinks
SecRule ARGS "@rx document\\.(?:cookie|domain|write|location)" "id:941190,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS DOM sink',severity:'CRITICAL'"

# String.fromCharCode
SecRule ARGS "@contains fromcharcode" "id:941200,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS fromCharCode',severity:'CRITICAL'"

# CSS expressions
SecRule ARGS "@rx expression\\s*\\(" "id:941210,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS CSS expression',severity:'CRITICAL'"

# data: URLs carrying HTML
SecRule ARGS "@contains data:text/html" "id:941220,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS data URL',severity:'CRITICAL'"

# Style tags with imports
SecRule ARGS "@rx <style[^>]*>.*@import" "id:941230,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS style import',severity:'CRITICAL'"

# innerHTML and outerHTML assignments
SecRule ARGS "@rx (?:inner|outer)html\\s*=" "id:941240,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS HTML assignment',severity:'CRITICAL'"

# Base and meta tags
SecRule ARGS "@rx <(?:base|meta|link)\\b" "id:941250,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS base or meta tag',severity:'CRITICAL'"

# srcdoc attribute
SecRule ARGS "@rx \\bsrcdoc\\s*=" "id:941260,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS srcdoc',severity:'CRITICAL'"

# Form actions pointing at scripts
SecRule ARGS "@rx formaction\\s*=" "id:941270,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'XSS formaction',severity:'CRITICAL'"

# Null bytes in arguments
SecRule ARGS "@contains %00" "id:941280,phase:2,deny,status:403,msg:'Null byte',severity:'WARNING'"

# Oversized argument names
SecRule ARGS_NAMES "@rx ^.{256,}$" "id:941290,phase:2,deny,status:403,msg:'Argument name too long',severity:'WARNING'"
"""

GENERATED_15 = """\
# Dialog functions written with JavaScript escapes or split by comments.
SecRule ARGS "@rx (?:alert|confirm|prompt|print)\\s*\\(" "id:100001,phase:2,deny,status:403,t:urlDecodeUni,t:jsDecode,t:removeComments,t:lowercase,msg:'Obfuscated dialog call'"
# \\u escapes used to spell identifiers.
SecRule ARGS "@rx \\\\u(?:\\{[0-9a-f]{1,6}\\}|00[67][0-9a-f])" "id:100002,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Unicode-escaped identifier'"
# Comments between an identifier and its argument list.
SecRule ARGS "@rx [a-z]/\\*[^*]*\\*/\\(" "id:100003,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Comment before call'"
# Double-encoded quote that breaks out of a string.
SecRule ARGS "@rx %22\\s*[;,+-]" "id:100004,phase:2,deny,status:403,t:lowercase,msg:'Double-encoded string break'"
# Timers with string arguments.
SecRule ARGS "@rx set(?:timeout|interval)\\s*\\(" "id:100005,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Timer with code string'"
# Tabs or line breaks inside the javascript scheme.
SecRule ARGS "@beginsWith javascript:" "id:100006,phase:2,deny,status:403,t:urlDecodeUni,t:htmlEntityDecode,t:removeWhitespace,t:lowercase,msg:'Obfuscated javascript scheme'"
# Entity-encoded javascript scheme.
SecRule ARGS "@rx &#(?:x6a|106);?avascript" "id:100007,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Entity-encoded scheme'"
# Quote followed by an escaped identifier.
SecRule ARGS "@rx \\"\\s*[;+-]\\s*\\\\u" "id:100008,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'String break into escaped identifier'"
# Escaped backslash-quote prefix.
SecRule ARGS "@contains \\\\\\";" "id:100009,phase:2,deny,status:403,t:urlDecodeUni,msg:'Escaped quote break'"
# Scheme split by control characters.
SecRule ARGS "@rx java[\\t\\n\\r]+script" "id:100010,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Split javascript scheme'"
# Dialog names rebuilt from escapes.
SecRule ARGS "@pm alert( confirm( prompt( print(" "id:100011,phase:2,deny,status:403,t:urlDecodeUni,t:jsDecode,t:removeWhitespace,t:removeComments,msg:'Dialog call after decoding'"
# Code strings handed to timers.
SecRule ARGS "@rx \\(\\s*'[^']*\\(" "id:100012,phase:2,deny,status:403,t:urlDecodeUni,t:jsDecode,msg:'Code string argument'"
# Statement break followed by a call.
SecRule ARGS "@rx \\"\\s*;\\s*[a-z_$][\\w$]*\\s*\\(" "id:100013,phase:2,deny,status:403,t:urlDecodeUni,t:jsDecode,t:removeComments,t:lowercase,msg:'String break into call'"
# Arithmetic string break into a call.
SecRule ARGS "@rx \\"\\s*[-+]\\s*[a-z_$][\\w$]*\\s*\\(" "id:100014,phase:2,deny,status:403,t:urlDecodeUni,t:jsDecode,t:removeComments,t:lowercase,msg:'Operator break into call'"
# Trailing comment after a call.
SecRule ARGS "@rx \\)\\s*;?\\s*//$" "id:100015,phase:2,deny,status:403,t:urlDecodeUni,t:jsDecode,msg:'Call followed by line comment'"
"""


def main():
    OUT.mkdir(exist_ok=True)
    blocked_ref, bypass_ref, blocked_dom, bypass_dom = attack_sets()
    ref = blocked_ref + bypass_ref
    dom = blocked_dom + bypass_dom
    all_raws = ref + dom
    assert len(ref) == 178 and len(dom) == 42 and len(set(all_raws)) == 220

    validated = []
    for i, raw in enumerate(ref):
        validated.append(record(f"r{i + 1:03d}", raw, "reflected", validation="valid"))
    for i, raw in enumerate(dom):
        validated.append(record(f"d{i + 1:03d}", raw, "dom_based", validation="valid"))
    write_jsonl("validated_220.jsonl", validated)

    bypass = [r for r in validated if r["raw"] in set(bypass_ref + bypass_dom)]
    write_jsonl("bypass_174.jsonl", [dict(r, waf_outcome="bypassed") for r in bypass])

    generated = []
    src = {"llm_generated": {"provider": "openai:gpt-4o", "prompt_id": "fixture"}}
    order = all_raws + all_raws[::5][:44]
    for i, raw in enumerate(order):
        at = "reflected" if raw in set(ref) else "dom_based"
        generated.append(record(f"gen-{i + 1:04d}", raw, at, source=src))
    write_jsonl("generated_264.jsonl", generated)

    benign = benign_set(800)
    assert len(set(benign)) == 800
    write_jsonl("benign_800.jsonl", [record(f"benign-{i + 1:04d}", v, None) for i, v in enumerate(benign)])
    write_jsonl("benign_80.jsonl", [record(f"benign-{i + 1:04d}", v, None) for i, v in enumerate(benign[:80])])

    (OUT / "mini-crs.conf").write_text(MINI_CRS, encoding="utf-8")
    (OUT / "generated-15.conf").write_text(GENERATED_15, encoding="utf-8")
    write_pipeline()


EXAMPLES = [
    ("ex-01", '";alert(1);//', "reflected"),
    ("ex-02", '\\";\\u0061\\u006c\\u0065\\u0072\\u0074(1);//', "reflected"),
    ("ex-03", '"-confirm/**/(1)-"', "reflected"),
    ("ex-04", '";setTimeout(\'\\u0061lert(1)\')//', "reflected"),
    ("ex-05", "java%09script:\\u0061lert(1)", "dom_based"),
]

ROUTES = {
    "path": "/gym",
    "params": {
        "p1": {"context": "html_body", "sanitize": "none"},
        "p2": {"context": "html_attribute", "sanitize": "none"},
        "p3": {"context": "html_body", "sanitize": "html_escape"},
        "p16": {"context": "js_string_dq", "sanitize": "none"},
        "p17": {"context": "js_string_sq", "sanitize": "none"},
        "p20": {"context": "url_param", "sanitize": "none"},
    },
}

PIPELINE = {
    "provider": {"kind": "mock", "mock_dir": "mock"},
    "examples": "examples.jsonl",
    "benign": "../benign_80.jsonl",
    "ruleset": "../mini-crs.conf",
    "routes": "../routes.json",
    "generation": {"reflected": 16, "dom_based": 4},
    "target": {"kind": "embedded"},
    "clustering": {"method": "tfidf_hac", "threshold": 1.8},
    "refine": {"max_iterations": 5, "target_recall": 0.85, "max_fp": 0},
}


LABELED = [
    ('";alert(1);//', "js_string_dq", "attack"),
    ('\\";\\u0061\\u006c\\u0065\\u0072\\u0074(1);//', "js_string_dq", "attack"),
    ('"-confirm/**/(1)-"', "js_string_dq", "attack"),
    ('"+prompt`1`+"', "js_string_dq", "attack"),
    ("%22;alert(1)//", "js_string_dq", "attack"),
    ("red%22;alert(origin);//", "js_string_dq", "attack"),
    ("</script><script>alert(1)</script>", "js_string_dq", "attack"),
    ("';alert(1);//", "js_string_sq", "attack"),
    ("'-\\u0061lert(1)-'", "js_string_sq", "attack"),
    ("'+eval('1')+'", "js_string_sq", "attack"),
    ('" onmouseover="alert(1)', "html_attribute", "attack"),
    ('"><svg onload=alert(1)>', "html_attribute", "attack"),
    ('" autofocus onfocus=confirm(1) x="', "html_attribute", "attack"),
    ("<script>alert(1)</script>", "html_body", "attack"),
    ("<img src=x onerror=alert(1)>", "html_body", "attack"),
    ("<svg/onload=prompt(1)>", "html_body", "attack"),
    ("%3Cscript%3Ealert(1)%3C/script%3E", "html_body", "attack"),
    ("javascript:alert(1)", "url_param", "attack"),
    ("java%09script:\\u0061lert(1)", "url_param", "attack"),
    ("&#106;avascript:confirm(1)", "url_param", "attack"),
    ("hello world", "html_body", "benign"),
    ("red dress", "js_string_dq", "benign"),
    ("O'Reilly books", "js_string_sq", "benign"),
    ("print shop (near me)", "js_string_dq", "benign"),
    ("alert(1)", "js_string_dq", "benign"),
    ('\\";\\u0061l\\x65rt(1);//', "js_string_dq", "benign"),
    ('";alert(1;//', "js_string_dq", "benign"),
    ('"quoted phrase"', "html_body", "benign"),
    ("5 > 3 and 2 < 4", "html_body", "benign"),
    ("a < b", "html_body", "benign"),
    ("https://example.com/page", "url_param", "benign"),
    ("mailto:x@example.com", "url_param", "benign"),
    ("100% cotton", "html_attribute", "benign"),
    ('50" screen', "html_attribute", "benign"),
    ("function names like foo()", "html_body", "benign"),
    ("onboarding=true", "url_param", "benign"),
    ('x" y', "js_string_dq", "benign"),
    ("semi;colon", "js_string_dq", "benign"),
    ("C%2B%2B tutorial", "html_body", "benign"),
    ("<3 love it", "html_body", "benign"),
]


def write_pipeline():
    d = OUT / "pipeline"
    (d / "mock").mkdir(parents=True, exist_ok=True)
    write_jsonl_to(d / "examples.jsonl", [record(i, r, t, validation="valid") for i, r, t in EXAMPLES])
    (OUT / "routes.json").write_text(json.dumps(ROUTES, indent=2) + "\n", encoding="utf-8")
    (d / "config.json").write_text(json.dumps(PIPELINE, indent=2) + "\n", encoding="utf-8")
    labeled = [{"raw": r, "context": c, "label": l} for r, c, l in LABELED]
    assert len(labeled) == 40
    (OUT / "validator_labeled.json").write_text(json.dumps(labeled, indent=1) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
