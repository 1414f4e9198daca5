"""sizeprobe: LLM-driven compiler code-size fuzzing."""
