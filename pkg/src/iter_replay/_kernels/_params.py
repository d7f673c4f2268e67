"""Index table of the packed parameter vector shared by both step backends."""

TASK_REACH = 0
TASK_PUSH = 1
TASK_SLIDE = 2
TASK_PUSH_OBSTACLE = 3
TASK_PICK_PLACE = 4

TASK_CODES = {
    "reach": TASK_REACH,
    "push": TASK_PUSH,
    "slide": TASK_SLIDE,
    "push_obstacle": TASK_PUSH_OBSTACLE,
    "pick_place_3d": TASK_PICK_PLACE,
}

P_TASK = 0
P_DT = 1
P_MAX_STEP = 2
P_NSUB = 3
P_GRIP_R = 4
P_OBJ_R = 5
P_GRIP_LIMIT_R = 6
P_OBJ_LIMIT_R = 7
P_Z_LO = 8
P_Z_HI = 9
P_TABLE_Z = 10
P_GLIDE = 11
P_HIT = 12
P_OBS_HL = 13
P_OBS_HW = 14
P_FINGER_MAX = 15
P_FINGER_STEP = 16
P_GRASP_TOL = 17
N_PARAMS = 18
