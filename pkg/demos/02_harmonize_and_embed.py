"""Why harmonization matters: platform styling dominates raw embeddings.

The same content described in three house styles lands far apart in
embedding space; after the summaries are standardized the copies coincide.
"""

import numpy as np

from mirror.embed import LocalDeterministicEmbedder
from mirror.harmonize import rule_fallback_summarize

content = "learning to bake sourdough bread at home"

styled = {
    "caption":   f"{content}!! \U0001F35E #baking #fyp https://linktr.ee/me",
    "chapters":  f"0:00 intro\n3:20 folding\n{content}\nsubscribe: https://yt.example/sub",
    "synopsis":  f"A cozy documentary about {content}.",
}

provider = LocalDeterministicEmbedder(dimension=256, seed=0)

print("pairwise cosine similarity, raw styled text:")
raw_vectors = provider.embed_batch(list(styled.values()))
for i, a in enumerate(styled):
    for j, b in enumerate(styled):
        if i < j:
            print(f"  {a:9} vs {b:9}: {float(raw_vectors[i] @ raw_vectors[j]):.3f}")

summaries = [rule_fallback_summarize("", text) for text in styled.values()]
print("\nharmonized summaries:")
for name, summary in zip(styled, summaries):
    print(f"  {name:9} -> {summary!r}")

clean_vectors = provider.embed_batch(summaries)
print("\npairwise cosine similarity, harmonized:")
for i, a in enumerate(styled):
    for j, b in enumerate(styled):
        if i < j:
            print(f"  {a:9} vs {b:9}: {float(clean_vectors[i] @ clean_vectors[j]):.3f}")
