"""Language model, CTC decoding, meter classification and the end-to-end head."""
