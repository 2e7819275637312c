"""Freezes reference-implementation metric values for the pairs in corpus.py.

Run once with the pinned reference package and grammars:

    pip install codebleu==0.7.0 tree-sitter==0.23.2 tree-sitter-java==0.23.5 \
        tree-sitter-python==0.23.6 tree-sitter-javascript==0.23.1 tree-sitter-c==0.23.4
    PYTHONHASHSEED=0 python gen_metric_golden.py

Writes codebleu_golden.json and dataflow_golden.json next to this file.

The reference merges data-flow parent names through a Python set, so its
data-flow score depends on the interpreter's string hash seed. Each case
therefore also records the range of that score over HASH_SEEDS seeds.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

from codebleu import bleu, dataflow_match, syntax_match, weighted_ngram_match
from codebleu.codebleu import PACKAGE_DIR
from codebleu.dataflow_match import dfg_function, get_data_flow
from codebleu.parser import remove_comments_and_docstrings
from codebleu.utils import get_tree_sitter_language
from tree_sitter import Parser

from corpus import CORPUS

HERE = Path(__file__).parent
HASH_SEEDS = 16
ATOMIC = ("string_literal", "string", "character_literal")
COMMENTS = ("comment", "line_comment", "block_comment")


def leaf_tokenizer(lang):
    parser = Parser(get_tree_sitter_language(lang))

    def tokenize(code):
        raw = code.encode()
        out = []

        def walk(node):
            if node.type in COMMENTS:
                return
            if len(node.children) == 0 or node.type in ATOMIC:
                out.append(raw[node.start_byte:node.end_byte].decode())
                return
            for c in node.children:
                walk(c)

        root = parser.parse(raw).root_node
        if root.children:
            walk(root)
        return out

    return tokenize


def components(pred, ref, lang, tokenize):
    pred, ref = pred.strip(), ref.strip()
    hyp, refs = tokenize(pred), [tokenize(ref)]
    ngram = bleu.corpus_bleu([refs], [hyp])
    keywords = [x.strip() for x in open(PACKAGE_DIR / "keywords" / f"{lang}.txt", encoding="utf-8")]
    weights = {t: 1 if t in keywords else 0.2 for t in refs[0]}
    weighted = weighted_ngram_match.corpus_bleu([[[refs[0], weights]]], [hyp])
    ts_lang = get_tree_sitter_language(lang)
    syntax = syntax_match.corpus_syntax_match([[ref]], [pred], lang, tree_sitter_language=ts_lang)
    dataflow = dataflow_match.corpus_dataflow_match([[ref]], [pred], lang, tree_sitter_language=ts_lang)
    if not dfg_entries(ref, lang):
        dataflow = 1.0
    return {"ngram": ngram, "weighted_ngram": weighted, "ast_match": syntax, "dataflow_match": dataflow}


def dfg_entries(code, lang):
    parser = Parser(get_tree_sitter_language(lang))
    try:
        code = remove_comments_and_docstrings(code.strip(), lang)
    except Exception:
        pass
    return [
        [name, pos, rel, sorted(names), sorted(positions)]
        for name, pos, rel, names, positions in get_data_flow(code, [parser, dfg_function[lang]])
    ]


def dataflow_scores():
    """Data-flow score of every pair under the current hash seed."""
    return [
        components(pred, ref, lang, str.split)["dataflow_match"]
        for lang, pairs in CORPUS.items()
        for pred, ref in pairs
    ]


def dataflow_ranges():
    runs = []
    for seed in range(HASH_SEEDS):
        env = dict(os.environ, PYTHONHASHSEED=str(seed))
        out = subprocess.run(
            [sys.executable, __file__, "--dataflow-only"], env=env, cwd=HERE, check=True, capture_output=True, text=True
        ).stdout
        runs.append(json.loads(out))
    return [[min(vals), max(vals)] for vals in zip(*runs)]


def main():
    ranges = dataflow_ranges()
    cases, flows = [], []
    for lang, pairs in CORPUS.items():
        for pred, ref in pairs:
            compat = components(pred, ref, lang, str.split)
            leaf = components(pred, ref, lang, leaf_tokenizer(lang))
            cases.append({
                "language": lang,
                "prediction": pred,
                "reference": ref,
                "compat": compat,
                "leaf": leaf,
                "dataflow_match_range": ranges[len(cases)],
            })
            for code in (pred, ref):
                flows.append({"language": lang, "code": code, "entries": dfg_entries(code, lang)})
    config = {
        "weights": [0.25, 0.25, 0.25, 0.25],
        "max_order": 4,
        "keyword_weight": 1.0,
        "other_weight": 0.2,
        "smoothing": "add_epsilon",
        "epsilon": 0.1,
        "ast_min_height": 2,
        "reference_impl": "codebleu 0.7.0",
        "dataflow_hash_seeds": HASH_SEEDS,
    }
    (HERE / "codebleu_golden.json").write_text(json.dumps({"config": config, "cases": cases}, indent=1) + "\n")
    (HERE / "dataflow_golden.json").write_text(json.dumps(flows, indent=1) + "\n")


if __name__ == "__main__":
    if "--dataflow-only" in sys.argv:
        import logging

        logging.disable(logging.CRITICAL)
        print(json.dumps(dataflow_scores()))
    else:
        main()
