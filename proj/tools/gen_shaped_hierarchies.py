#!/usr/bin/env python3
"""Writes the hierarchy files under data/.

cifar100.tsv is the real CIFAR-100 coarse/fine split. The FGVC and NABirds
files reproduce only the node counts and depth profile of those taxonomies;
their identifiers are synthetic. Output is fully determined by the fixed seeds
below, so rerunning the script reproduces the committed files byte for byte.
"""

import argparse
import pathlib
import random

CIFAR100 = {
    "aquatic_mammals": ["beaver", "dolphin", "otter", "seal", "whale"],
    "fish": ["aquarium_fish", "flatfish", "ray", "shark", "trout"],
    "flowers": ["orchid", "poppy", "rose", "sunflower", "tulip"],
    "food_containers": ["bottle", "bowl", "can", "cup", "plate"],
    "fruit_and_vegetables": ["apple", "mushroom", "orange", "pear", "sweet_pepper"],
    "household_electrical_devices": ["clock", "keyboard", "lamp", "telephone", "television"],
    "household_furniture": ["bed", "chair", "couch", "table", "wardrobe"],
    "insects": ["bee", "beetle", "butterfly", "caterpillar", "cockroach"],
    "large_carnivores": ["bear", "leopard", "lion", "tiger", "wolf"],
    "large_man-made_outdoor_things": ["bridge", "castle", "house", "road", "skyscraper"],
    "large_natural_outdoor_scenes": ["cloud", "forest", "mountain", "plain", "sea"],
    "large_omnivores_and_herbivores": ["camel", "cattle", "chimpanzee", "elephant", "kangaroo"],
    "medium_mammals": ["fox", "porcupine", "possum", "raccoon", "skunk"],
    "non-insect_invertebrates": ["crab", "lobster", "snail", "spider", "worm"],
    "people": ["baby", "boy", "girl", "man", "woman"],
    "reptiles": ["crocodile", "dinosaur", "lizard", "snake", "turtle"],
    "small_mammals": ["hamster", "mouse", "rabbit", "shrew", "squirrel"],
    "trees": ["maple_tree", "oak_tree", "palm_tree", "pine_tree", "willow_tree"],
    "vehicles_1": ["bicycle", "bus", "motorcycle", "pickup_truck", "train"],
    "vehicles_2": ["lawn_mower", "rocket", "streetcar", "tank", "tractor"],
}


def distribute(rng, parents, total):
    """Every parent gets at least one child; the rest land at random."""
    counts = [1] * len(parents)
    for _ in range(total - len(parents)):
        counts[rng.randrange(len(parents))] += 1
    return counts


def expand(rng, edges, parents, total, prefix):
    children = []
    counter = 0
    for parent, count in zip(parents, distribute(rng, parents, total)):
        for _ in range(count):
            child = f"{prefix}{counter:03d}"
            counter += 1
            edges.append((parent, child))
            children.append(child)
    return children


def cifar100():
    edges = []
    for coarse, fine in CIFAR100.items():
        edges.append(("root", coarse))
        edges.extend((coarse, leaf) for leaf in fine)
    return edges


def fgvc_shaped():
    # 30 manufacturers, 70 families, 100 variants; all leaves at depth 3.
    rng = random.Random(20240701)
    edges = []
    makers = expand(rng, edges, ["root"], 30, "maker_")
    families = expand(rng, edges, makers, 70, "family_")
    expand(rng, edges, families, 100, "variant_")
    return edges


def nabirds_shaped():
    # 22 orders, 228 families, 350 species. 205 species split into two
    # variants each, so leaves sit at depth 3 or 4: n = 555, N = 1010.
    rng = random.Random(20240702)
    edges = []
    orders = expand(rng, edges, ["root"], 22, "order_")
    families = expand(rng, edges, orders, 228, "family_")
    species = expand(rng, edges, families, 350, "species_")
    split = sorted(rng.sample(species, 205))
    counter = 0
    for s in split:
        for _ in range(2):
            edges.append((s, f"variant_{counter:03d}"))
            counter += 1
    return edges


def write(path, edges, header):
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write(f"# {header}\n")
        for parent, child in edges:
            out.write(f"{parent}\t{child}\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).parent.parent / "data")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    write(args.out / "cifar100.tsv", cifar100(), "CIFAR-100: 20 superclasses x 5 classes")
    write(args.out / "fgvc_shaped.tsv", fgvc_shaped(),
          "FGVC-Aircraft shape: 30 manufacturers, 70 families, 100 variants")
    write(args.out / "nabirds_shaped.tsv", nabirds_shaped(),
          "NABirds shape: 555 leaves at depth 3 or 4, 1010 non-root nodes")
    write(args.out / "diamond_dag.tsv",
          [("root", "X"), ("root", "Y"), ("X", "L"), ("Y", "L"), ("X", "M"), ("Y", "K")],
          "small DAG: L has two parents")
    write(args.out / "animals.tsv",
          [("root", "Dog"), ("root", "Cat"), ("Dog", "Husky"), ("Dog", "Beagle")],
          "animal toy")


if __name__ == "__main__":
    main()
