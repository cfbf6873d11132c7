"""Morphology-aware two-tier transformer language modeling toolkit.

Subpackages:
    tokenizer  morphological analysis, BPE fallback, emoji verbalization
    nn         tensor ops, gradient checking, checkpoint container
    model      two-tier encoder model and parameter accounting
    pretrain   masking, multi-task losses, gradient surgery, Adam, training loop
    finetune   classification fine-tuning, metrics, grid/stability/ensemble protocols
    platform   dataset store, FIFO fine-tune queue, model serving HTTP API
    report     CSV tables and matplotlib figures
"""

__version__ = "0.1.0"
