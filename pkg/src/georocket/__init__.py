"""georocket: a chunk-based data store for large geospatial files.

Imported files are split into immutable chunks (one per feature), indexed
asynchronously (bounding boxes, attributes, full text), searchable with a
small boolean/comparison/spatial query language, and reconstructed into
valid output documents on export.
"""

__version__ = "0.1.0"
