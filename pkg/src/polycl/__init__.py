"""Contrastive pretraining of polymer sequence representations.

Subpackages and modules:

- ``smiles_core``: polymer-SMILES parsing, canonicalization, enumeration,
  tokenization, vocabulary
- ``augmentation``: string-level positive-pair construction
- ``encoder``: compact transformer encoder with projection head
- ``pretrain``: normalized temperature-scaled cross-entropy training loop
- ``repr_metrics``: alignment and uniformity of an embedding space
- ``transfer_eval``: frozen-encoder property-regression harness
- ``cli_io``: configuration, file formats, command-line entry points
"""

__version__ = "0.1.0"
