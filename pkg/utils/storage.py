import json
import logging
import os

from core.conf import lab_setting

logger = logging.getLogger(__name__)


class ArtifactStorage:
    """Destination of run artifacts; remembers what it wrote, in order."""

    def __init__(self):
        self.written = []

    def write_json(self, name, payload):
        raise NotImplementedError("Subclasses must implement write_json")

    def write_table(self, name, frame):
        raise NotImplementedError("Subclasses must implement write_table")

    def location(self, name):
        raise NotImplementedError("Subclasses must implement location")


class LocalArtifactStorage(ArtifactStorage):
    def __init__(self, root=None):
        super().__init__()
        self.root = lab_setting('OUTPUT_DIR', root)

    def location(self, name):
        return os.path.join(self.root, name)

    def _prepare(self, name):
        os.makedirs(self.root, exist_ok=True)
        return self.location(name)

    def write_json(self, name, payload):
        path = self._prepare(name)
        try:
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(payload, f, indent=2, sort_keys=True, allow_nan=True)
                f.write('\n')
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"Error writing {path}: {str(e)}", exc_info=True)
            raise
        self.written.append(name)
        logger.info(f"Wrote {path}")
        return path

    def write_table(self, name, frame):
        path = self._prepare(name)
        try:
            frame.to_csv(path, index=False, float_format='%.17g')
        except OSError as e:
            logger.error(f"Error writing {path}: {str(e)}", exc_info=True)
            raise
        self.written.append(name)
        logger.info(f"Wrote {path} ({len(frame)} rows)")
        return path


def get_artifact_storage(out_dir=None):
    return LocalArtifactStorage(out_dir)
