"""Recognizer/embedding fusion for word recognition and retrieval."""
