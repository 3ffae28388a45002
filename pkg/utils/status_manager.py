"""
运行状态管理模块
每个命令在输出目录写 run_status.json，记录命令、开始时间和结果
"""
import json
from datetime import datetime
from pathlib import Path
from typing import Dict, Optional

from core.logger import logger

RUN_STATUS_FILE_NAME = "run_status.json"


class RunStatusManager:
    """运行状态管理器"""

    def __init__(self, output_dir: Path):
        self.status_file = Path(output_dir) / RUN_STATUS_FILE_NAME
        self.status_file.parent.mkdir(parents=True, exist_ok=True)

    def read_status(self) -> Optional[Dict]:
        """
        读取运行状态

        Returns:
            Optional[Dict]: 状态字典，文件不存在或损坏时返回 None
        """
        if not self.status_file.exists():
            return None

        try:
            with open(self.status_file, "r", encoding="utf-8") as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning(f"读取状态文件失败: {e}")
            return None

    def write_status(self, status: Dict) -> None:
        with open(self.status_file, "w", encoding="utf-8") as f:
            json.dump(status, f, indent=2, ensure_ascii=False)

    def mark_running(self, command: str, scenario: str) -> None:
        """标记命令开始，覆盖上一次运行的状态"""
        self.write_status({
            "command": command,
            "scenario": scenario,
            "start_time": datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
            "is_running": True,
        })

    def mark_completed(self, success: bool, message: str = "") -> None:
        """
        标记命令结束

        Args:
            success: 是否成功
            message: 结果说明
        """
        status = self.read_status() or {}
        status["is_running"] = False
        status["end_time"] = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        status["last_status"] = "success" if success else "failed"
        if message:
            status["message"] = message
        self.write_status(status)
