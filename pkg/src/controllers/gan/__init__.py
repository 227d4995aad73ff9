from .gan_controller import GanController, GanResult
