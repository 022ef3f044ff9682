"""
APNC Kernel K-Means

Kernel k-means over a map/reduce engine, using embeddings that approximate
nearest-centroid assignment:

src/
├── dataio/      - Instances, blocks, CSV/libsvm loaders, model and embedding files
├── kernels/     - Kernel functions, gram blocks, rbf self-tuning
├── linalg/      - Jacobi eigensolver, whitening, ordered products
├── engine/      - Map/reduce jobs, shuffle accounting, job runner
├── apnc/        - Coefficients, blockwise embedding, embedding-space Lloyd
├── oracle/      - Exact kernel k-means on the full kernel matrix
├── evaluation/  - NMI, synthetic blobs, experiment harness
├── config.py    - Settings and experiment files
└── main.py      - Command-line entry point
"""

__version__ = "0.1.0"
