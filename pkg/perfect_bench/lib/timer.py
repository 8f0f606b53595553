import time

# Wall-clock timer. Timings only go to the log, never into result files.
class Timer:
    def __init__(self):
        self.start_time: float = 0
        self.end_time: float = 0

    def start(self):
        self.start_time = time.perf_counter()

    def stop(self):
        self.end_time = time.perf_counter()

    def __enter__(self) -> "Timer":
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()
        return False

    # Return result in milliseconds.
    def elapsed_time_ms(self) -> float:
        return (self.end_time - self.start_time) * 1000.0

    def elapsed_time_sec(self) -> float:
        return self.end_time - self.start_time
