#!/usr/bin/env python3
"""Regenerate include/ragcal/prompts_data.hpp from prompts/*.txt."""

import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent
NAMES = [
    "vanilla",
    "cot",
    "multi_step",
    "noise_aware",
    "rules",
    "noisegen_cf",
    "noisegen_rel",
    "noisegen_irr",
    "p_true",
]


def main() -> None:
    out = [
        "#pragma once\n",
        "// Embedded copies of the prompt template assets in prompts/. A test keeps\n",
        "// these byte-identical with the files; regenerate by re-running the embed\n",
        "// step in tools/embed_prompts.py if a template changes.\n",
        "\nnamespace ragcal::prompt_data {\n",
    ]
    for name in NAMES:
        text = (ROOT / "prompts" / f"{name}.txt").read_text(encoding="utf-8")
        if ')tpl"' in text:
            raise SystemExit(f"{name}.txt collides with the raw-string delimiter")
        out.append(f'\ninline constexpr char k_{name}[] = R"tpl({text})tpl";\n')
    out.append("\n}  // namespace ragcal::prompt_data\n")
    target = ROOT / "include" / "ragcal" / "prompts_data.hpp"
    target.write_text("".join(out), encoding="utf-8")
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
