#!/usr/bin/env python3
# Copyright 2026 The GenXSS Authors
# SPDX-License-Identifier: Apache-2.0
"""Records canned LLM replies for fixtures/pipeline/config.json.

Runs `genxss pipeline` until it stops asking for unknown prompts. Each time
the mock provider reports a missing response, the dumped prompt is classified
(payload generation, first rules, refinement) and a scripted reply is stored
under fixtures/pipeline/mock/<hash>.txt.

    python3 tools/fixtures/make_mocks.py build/tools/genxss
"""

import pathlib
import re
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[2]
PIPE = ROOT / "fixtures" / "pipeline"
MOCK = PIPE / "mock"

REFLECTED = [
    '";alert(7);//',
    '"-prompt(7)-"',
    '";confirm(7);//',
    "\"+alert('pipe')+\"",
    '";\\u0061lert(7);//',
    '"-\\u0063onfirm(7)-"',
    '";pr\\u006fmpt(7);//',
    '"+al\\u0065rt(7)+"',
    '\\";\\u{61}lert(7)//',
    '";alert/**/(7);//',
    '"-confirm/*x*/(7)-"',
    '";prompt/*p*/(7);//',
    "\";setTimeout('\\u0061lert(7)');//",
    "\"-setInterval('\\u0063onfirm(7)')-\"",
    '";alert`7`;//',
    '"-confirm`7`-"',
]

DOM = [
    "javascript:alert(7)",
    "java%09script:\\u0061lert(7)",
    "java%0ascript:\\u0070rompt(7)",
    "&#106;avascript:\\u0063onfirm(7)",
]

RULE_COMMENT = (
    'SecRule ARGS "@rx [a-z]/\\*[^*]*\\*/\\(" '
    "\"id:200001,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Comment before call'\""
)
RULE_SCHEME = (
    'SecRule ARGS "@rx java[\\t\\n\\r]+script" '
    "\"id:200002,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Split javascript scheme'\""
)
RULE_TIMER = (
    'SecRule ARGS "@rx set(?:timeout|interval)\\s*\\(" '
    "\"id:200003,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Timer with code string'\""
)
RULE_UNICODE = (
    'SecRule ARGS "@rx \\\\u(?:\\{[0-9a-f]{1,6}\\}|00[67][0-9a-f])" '
    "\"id:200004,phase:2,deny,status:403,t:urlDecodeUni,t:lowercase,msg:'Unicode-escaped identifier'\""
)


def payload_reply(items):
    lines = ["Here are the new payloads:", ""]
    lines += [f"{i + 1}. {p}" for i, p in enumerate(items)]
    return "\n".join(lines) + "\n"


def rules_reply(intro, rules):
    return intro + "\n\n```apache\n" + "\n".join(rules) + "\n```\n"


def reply_for(prompt):
    if "## Previous Rules" in prompt:
        if "id:200003" in prompt:
            return rules_reply(
                "The remaining bypasses spell identifiers with \\u escapes. Updated rules:",
                [RULE_COMMENT, RULE_SCHEME, RULE_TIMER, RULE_UNICODE],
            )
        return rules_reply(
            "Timers with code strings still pass. Updated rules:", [RULE_COMMENT, RULE_SCHEME, RULE_TIMER]
        )
    if "## Cluster Characteristics" in prompt:
        return rules_reply("Rules for the clusters:", [RULE_COMMENT, RULE_SCHEME])
    if "## Tasks" in prompt:
        return payload_reply(DOM if "java%09script" in prompt else REFLECTED)
    raise SystemExit("unrecognized prompt:\n" + prompt[:400])


def main():
    genxss = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else ROOT / "build" / "tools" / "genxss").resolve()
    if MOCK.exists():
        shutil.rmtree(MOCK)
    MOCK.mkdir(parents=True)
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp) / "out"
        dump = pathlib.Path(tmp) / "prompts"
        for _ in range(20):
            proc = subprocess.run(
                [str(genxss), "pipeline", "--config", str(PIPE / "config.json"), "--out-dir", str(out),
                 "--dump-prompts", str(dump), "--force"],
                capture_output=True, text=True,
            )
            if proc.returncode == 0:
                print(proc.stdout)
                return
            m = re.search(r"no mock response for prompt ([0-9a-f]{64})", proc.stderr)
            if not m:
                raise SystemExit(proc.stderr)
            h = m.group(1)
            prompt = (dump / f"{h}.prompt.txt").read_text(encoding="utf-8")
            (MOCK / f"{h}.txt").write_text(reply_for(prompt), encoding="utf-8")
    raise SystemExit("too many prompts")


if __name__ == "__main__":
    main()
