#!/usr/bin/env python3
"""Writes tests/fixtures/embeddings50.txt, a small GloVe-format table.

Words in the same theme share a random centroid plus per-word noise, so
within-theme cosines sit well above cross-theme ones. Output is checked in.
"""

import argparse

import numpy as np

DIM = 50

THEMES = {
    "combat": """shooter shooters gun guns weapon weapons enemy enemies soldier soldiers bomb flag
        match payload team teams assault war battle battles army sword swords turret turrets base
        bases target targets ally allies rival death class player players invaders champion
        abilities ability items minions""",
    "fantasy": """dragon castle princess king kingdom magic potion potions spell wizard frog curse
        knight knights quest dungeon alchemy antidote monster monsters giant gems rpg fantasy""",
    "nature": """flower flowers plant plants forest forests field tree trees garden seed farm crop
        crops animal animals alligator swamp river island fish wilds mountain mountains fruit
        apples village market cold ingredients storms boat""",
    "cooking": """onion onions knife knives kitchen chef meal meals recipe recipes food foods onigiri
        rice restaurant dish dishes meat meats veggies balls customers cooks master""",
    "home": """home dorm room college tuition roommate roommates friend friends house furniture
        student rent""",
    "racing": """car cars race track racing driver speed engine road laps truck trucks desert""",
    "cyber": """robot robots police gang gangs corporation corporations hacker city computer data
        network cyberpunk neon megacorps street streets skateboard tricks combo system""",
    "space": """ship planet planets star stars galaxy alien aliens station stations asteroid
        asteroids spaceship rocket cargo minerals generator creatures""",
    "building": """tower towers wall walls bridge building buildings stone blocks structure
        resource resources trains scrap""",
    "puzzle": """puzzle puzzles tile tiles piece pieces level levels lines riddles ghost""",
}

# Frequent words with no theme: random directions.
FILLER = """the game world time thing things way everything anything array open-world
    exploration map test fun""".split()


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=2023)
    parser.add_argument("--noise", type=float, default=0.6)
    parser.add_argument("--out", default="tests/fixtures/embeddings50.txt")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    rows = {}
    for theme, words in THEMES.items():
        centroid = rng.standard_normal(DIM)
        centroid /= np.linalg.norm(centroid)
        for word in words.split():
            noise = rng.standard_normal(DIM) / np.sqrt(DIM)
            rows.setdefault(word, centroid + args.noise * noise)
    for word in FILLER:
        rows.setdefault(word, rng.standard_normal(DIM) / np.sqrt(DIM))

    with open(args.out, "w") as f:
        for word in sorted(rows):
            f.write(word + " " + " ".join(f"{x:.6f}" for x in rows[word]) + "\n")


if __name__ == "__main__":
    main()
