#ifndef EXT_H
#define EXT_H
#include "types.h"
void ext_init(void);
tS32 ext_read(void);
void ext_other(void);
#endif
