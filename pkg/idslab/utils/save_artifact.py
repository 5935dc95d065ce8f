import hashlib
import os
from typing import Optional, Tuple

from idslab.utils import logger


def save_artifact(
    filename: str,
    file_bytes: bytes,
    subfolder: Optional[str] = None,
    base_dir: Optional[str] = None,
) -> Tuple[str, str]:
    """
    Save a payload into the run directory.

    Args:
        filename (str): The name of the file to save.
        file_bytes (bytes): The bytes of the file to save.
        subfolder (str): Optional subfolder below the run directory.
        base_dir (str): Run directory. Defaults to the logger's output directory.
    Returns:
        tuple[str, str]: The path of the saved payload and its SHA-256 hex digest.
    """
    target = base_dir or logger.base_path
    if subfolder:
        target = os.path.join(target, subfolder)

    os.makedirs(target, exist_ok=True)

    file_path = os.path.join(target, filename)
    with open(file_path, "wb") as f:
        f.write(file_bytes)

    digest = hashlib.sha256(file_bytes).hexdigest()
    logger.debug(f"Payload saved at: {file_path} (sha256 {digest[:12]})")
    return file_path, digest


def file_digest(path: str) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()
