# RP-TSNE: random projection before t-SNE, with a from-scratch t-SNE engine
