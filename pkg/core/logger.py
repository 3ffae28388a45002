"""
日志模块
文件日志写入 data/logs/，控制台输出走 stderr（stdout 留给结果表格）
"""
import logging
import sys
from logging import FileHandler, Formatter, StreamHandler

from config import LOG_DIR

# 这些关键字直接交给 logging，其余关键字参与 str.format
_PASSTHROUGH_KWARGS = frozenset({"exc_info", "stack_info", "extra"})

_FORMATTER = Formatter(
    '%(asctime)s - %(filename)s:%(lineno)d - %(levelname)s - %(message)s',
    datefmt='%Y-%m-%d %H:%M:%S'
)


class CustomLogger:
    """带控制台 / 文件两路输出的 logger 包装，支持 logger.info("t = {}", t) 写法"""

    def __init__(self, name, log_file=None, level=logging.DEBUG, console_level=logging.INFO):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)
        self.logger.propagate = False

        # 同名 logger 只装配一次
        if self.logger.handlers:
            return

        self.logger.addHandler(self._handler(StreamHandler(sys.stderr), console_level))
        if log_file:
            self.logger.addHandler(self._handler(FileHandler(log_file, mode='a', encoding='utf-8'), logging.NOTSET))

    @staticmethod
    def _handler(handler, level):
        handler.setFormatter(_FORMATTER)
        handler.setLevel(level)
        return handler

    def _console_handlers(self):
        return [h for h in self.logger.handlers if type(h) is StreamHandler]

    def set_console_level(self, level):
        """调整控制台输出级别，文件日志不受影响"""
        for handler in self._console_handlers():
            handler.setLevel(level)

    def console_level(self):
        handlers = self._console_handlers()
        return handlers[0].level if handlers else logging.NOTSET

    def _log(self, level, msg, *args, **kwargs):
        passthrough = {k: kwargs.pop(k) for k in list(kwargs) if k in _PASSTHROUGH_KWARGS}
        if args or kwargs:
            msg = msg.format(*args, **kwargs)
        # stacklevel=3 指向调用 info/debug 的位置
        self.logger.log(level, msg, stacklevel=3, **passthrough)

    def debug(self, msg, *args, **kwargs):
        self._log(logging.DEBUG, msg, *args, **kwargs)

    def info(self, msg, *args, **kwargs):
        self._log(logging.INFO, msg, *args, **kwargs)

    def warning(self, msg, *args, **kwargs):
        self._log(logging.WARNING, msg, *args, **kwargs)

    def error(self, msg, *args, **kwargs):
        self._log(logging.ERROR, msg, *args, **kwargs)

    def critical(self, msg, *args, **kwargs):
        self._log(logging.CRITICAL, msg, *args, **kwargs)


logger = CustomLogger('bd_predator_prey', log_file=str(LOG_DIR / 'app.log'))


def create_service_logger(service_name, log_file_name):
    """
    为单个入口创建写入独立日志文件的 logger

    Args:
        service_name: logger 名称后缀，完整名称为 bd_predator_prey.<service_name>
        log_file_name: data/logs/ 下的文件名（如 'cli.log'）
    """
    return CustomLogger(f'bd_predator_prey.{service_name}', log_file=str(LOG_DIR / log_file_name))
