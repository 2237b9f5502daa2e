#!/usr/bin/env python3
"""
Check that the MNIST-style datasets used by the experiments load cleanly
"""
import os
import sys
from pathlib import Path
from dotenv import load_dotenv

# Get the project root directory (parent of utils/)
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

# Load environment variables from project root
load_dotenv(PROJECT_ROOT / ".env")

IDX_PAIRS = (
    ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ("train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"),
    ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),
)


def _find_pair(directory: Path):
    for images, labels in IDX_PAIRS:
        if (directory / images).exists() and (directory / labels).exists():
            return directory / images, directory / labels
    return None, None


def check_datasets():
    """Check dataset files and a tiny end-to-end run"""

    print("=" * 60)
    print("Dataset Check")
    print("=" * 60)
    print()

    # Step 1: Check environment variables
    print("Step 1: Checking environment variables...")

    mnist_dir = os.getenv("RPTSNE_MNIST_DIR")
    out_dir = os.getenv("RPTSNE_OUT_DIR", "./runs")

    print(f"  RPTSNE_MNIST_DIR: {mnist_dir or '[NOT SET]'}")
    print(f"  RPTSNE_OUT_DIR: {out_dir}")
    print()

    if not mnist_dir:
        print("❌ ERROR: RPTSNE_MNIST_DIR is not set in .env")
        print("   Add: RPTSNE_MNIST_DIR=/path/to/mnist")
        return False

    # Step 2: Find the IDX files
    print("Step 2: Looking for IDX files...")

    data_path = Path(mnist_dir)
    if not data_path.is_absolute():
        data_path = PROJECT_ROOT / mnist_dir

    images, labels = _find_pair(data_path)
    if images is None or labels is None:
        print("❌ ERROR: IDX image/label files not found")
        print(f"   Looking in: {data_path}")
        print(f"   Expected one of: {', '.join(pair[0] for pair in IDX_PAIRS)}")
        return False

    print(f"✓ Images: {images}")
    print(f"✓ Labels: {labels}")
    print()

    # Step 3: Parse them
    print("Step 3: Parsing IDX files...")

    try:
        from src.utils.data_io import load_idx

        X, y = load_idx(str(images), str(labels))
        print(f"✓ Loaded {X.shape[0]} images of dimension {X.shape[1]}")
        print(f"  Pixel range: [{X.min():.3f}, {X.max():.3f}]")
        print(f"  Distinct labels: {sorted(set(y.tolist()))}")
        print()
    except Exception as e:
        print(f"❌ ERROR: Failed to parse dataset: {str(e)}")
        return False

    # Step 4: Tiny end-to-end run
    print("Step 4: Embedding a 200-point subsample...")

    try:
        from src.evaluation import accuracy_score
        from src.models.config import TsneConfig
        from src.tsne.engine import run_tsne
        from src.utils.data_io import subsample

        X_small, y_small = subsample(X, y, 200, seed=0)
        embedding, trace = run_tsne(X_small, TsneConfig(perplexity=20, n_iter=300))
        report = accuracy_score(embedding, y_small)

        print(f"✓ t-SNE finished in {trace.seconds:.2f}s")
        print(f"  KL: {trace.initial_kl:.4f} -> {trace.final_kl:.4f}")
        print(f"  Accuracy score: {report.score:.4f}")
        print()

        if report.score < 0.5:
            print("⚠️  WARNING: accuracy is unusually low for MNIST-style data")
            print("   Check that images and labels come from the same split")
            print()

    except Exception as e:
        print(f"❌ ERROR: End-to-end run failed: {str(e)}")
        return False

    # Success summary
    print("=" * 60)
    print("✓ DATASET CHECK PASSED")
    print("=" * 60)
    print()
    print("Next steps:")
    print(f"  python cli.py convert --format idx --images {images} --labels {labels} \\")
    print("      --subsample 2000 --output data/mnist2000.f64")
    print("  python cli.py sweep --matrix data/mnist2000.f64 --reducers random_projection,pca")
    print()

    return True


if __name__ == "__main__":
    try:
        success = check_datasets()
        sys.exit(0 if success else 1)
    except KeyboardInterrupt:
        print("\n\nCheck interrupted by user")
        sys.exit(1)
    except Exception as e:
        print(f"\n❌ Unexpected error: {str(e)}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
