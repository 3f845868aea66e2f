import csv

import numpy as np
import pytest
import torch
from transformers import T5Config, T5EncoderModel


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A tiny randomly initialized T5 encoder saved to disk."""
    torch.manual_seed(0)
    config = T5Config(vocab_size=4096, d_model=16, d_kv=4, d_ff=32,
                      num_layers=1, num_heads=2, decoder_start_token_id=0)
    model = T5EncoderModel(config)
    path = tmp_path_factory.mktemp("model") / "tiny-t5"
    model.save_pretrained(path)
    return str(path)


@pytest.fixture
def series_csv(tmp_path):
    def write(values, name="series.csv", header=("value",)):
        path = tmp_path / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for v in np.asarray(values):
                writer.writerow([repr(float(v))])
        return str(path)
    return write
