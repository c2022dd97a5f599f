#!/usr/bin/env python3
"""Regenerates data/lexicon.tsv.

Requires `pip install lemminflect wordfreq`. The output is checked in; the C++
build never runs this script.

Each word gets one line per reading, most likely reading first. The tagger
uses the first line as the default tag and the remaining lines as the readings
its contextual rules may switch to.
"""

import argparse
import sys

import lemminflect
import wordfreq

ARTICLES = {"a", "an", "the"}

# Function words never carry a content tag.
CLOSED_CLASS = set("""
i me my mine myself you your yours yourself yourselves he him his himself she her hers herself
it its itself we us our ours ourselves they them their theirs themselves one ones
this that these those which who whom whose what whatever whoever whichever
and or but nor so yet either neither both not no
of in on at by for with without about against between into through during before after
above below to from up down out off over under again further then once here there when
where why how all any each few more most other some such only own same than too very
can could will would shall should may might must
is am are was were be been being have has had having do does did doing
as if while because until although though unless since whether
per via upon onto within across along among around behind beyond toward towards
near inside outside beside besides despite except like unlike
also just even still already ever never always often sometimes soon now
every another many much several
""".split())

# Noun/verb-ambiguous words that read as verbs in game descriptions.
GAME_VERBS = set("""
attack build jump fight play use help run craft trade race shoot hack cook climb explore
collect defend protect destroy upgrade unlock customize design create make control command
lead manage guide solve discover travel battle survive escape hunt gather skate ride drive
fly sail swim dodge block parry cast summon train loot raid sneak hide search find buy sell
earn spend save rescue capture conquer recruit hire equip wield fire throw dash slide grind
roll drop push pull plan coordinate communicate decorate grow plant harvest brew mix combine
master challenge compete win beat defeat kill slay smash blast chase catch pick place move
change choose select swap switch share join meet talk chat vote watch read write draw paint
sing dance cut heal cure repair fix transform evolve breed feed tame hatch raise clean dress
shop bake serve deliver ship launch pilot navigate scout track program experience enjoy learn
study teach visit return complete finish start begin continue reach scale cross leap hop
bounce crawl walk sprint rush charge strike punch kick stab slash aim snipe reload boost
become take give get go come see look keep let put set try turn show hold bring stand
follow open close stop answer ask call need want love hate fear dream work rule
""".split())

CONTENT = ("NOUN", "VERB", "ADJ")


def ratio(forms, base):
    return max([wordfreq.word_frequency(f, "en") for f in forms] or [0.0]) / base


def readings(word):
    lemmas = lemminflect.getAllLemmas(word)
    tags = []
    for upos in lemmas:
        tag = {"NOUN": "NOUN", "PROPN": "NOUN", "VERB": "VERB", "ADJ": "ADJ"}.get(upos)
        if tag and tag not in tags:
            tags.append(tag)
    if not tags:
        if lemmas:  # ADV / AUX only
            return ["OTHER"]
        return []

    # Participles double as adjectives ("a ruined castle").
    if "VERB" in tags and "ADJ" not in tags:
        for lemma in lemmas["VERB"]:
            if word != lemma and word in lemminflect.getInflection(lemma, "VBN"):
                tags.append("ADJ")
                break

    base = max(wordfreq.word_frequency(word, "en"), 1e-9)
    comparative = "ADJ" in tags and ratio(lemminflect.getInflection(word, "JJR"), base) > 0.03
    past = [f for f in lemminflect.getInflection(word, "VBD") if f != word]
    verbal = "VERB" in tags and ratio(past, base) > 0.25

    def rank(tag):
        if word in GAME_VERBS:
            order = ["VERB", "NOUN", "ADJ"]
        elif word.endswith("ing") and "VERB" in tags:
            order = ["VERB", "NOUN", "ADJ"]
        elif word.endswith("ed") and "VERB" in tags:
            order = ["ADJ", "VERB", "NOUN"]
        elif comparative:  # gradable: heavy/heavier
            order = ["ADJ", "NOUN", "VERB"]
        elif verbal:  # past tense common relative to the base form
            order = ["VERB", "NOUN", "ADJ"]
        else:
            order = ["NOUN", "ADJ", "VERB"]
        return order.index(tag)

    return sorted(tags, key=rank)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--words", type=int, default=30000)
    parser.add_argument("--extra", default=None, help="file of extra words to include")
    args = parser.parse_args()

    words = [w for w in wordfreq.top_n_list("en", args.words * 2) if w.isalpha() and w.isascii()]
    words = words[: args.words]
    if args.extra:
        with open(args.extra) as f:
            words += [w.strip().lower() for w in f if w.strip()]
    words += sorted(GAME_VERBS)

    out = sys.stdout
    out.write("# word<TAB>TAG, one line per reading, most likely reading first\n")
    seen = set()
    for word in words:
        if word in seen:
            continue
        seen.add(word)
        if word in ARTICLES:
            out.write(f"{word}\tARTICLE\n")
            continue
        if word in CLOSED_CLASS:
            out.write(f"{word}\tOTHER\n")
            continue
        tags = readings(word)
        for tag in tags:
            out.write(f"{word}\t{tag}\n")


if __name__ == "__main__":
    main()
